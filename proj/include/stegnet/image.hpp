// 8-bit RGB images and their PNG / PPM (P6) codecs. PNG support is the
// subset steganography needs: reading 8-bit gray/RGB/with-alpha
// non-interlaced files, writing 8-bit RGB. Alpha is dropped and gray is
// replicated to three channels on read.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegnet/tensor.hpp"

namespace stegnet {

struct Image8 {
    int w = 0, h = 0;
    std::vector<uint8_t> rgb; // interleaved, row-major, 3 bytes per pixel

    Image8() = default;
    Image8(int width, int height) : w(width), h(height), rgb(static_cast<size_t>(width) * height * 3) {}

    uint8_t* px(int x, int y) { return rgb.data() + (static_cast<size_t>(y) * w + x) * 3; }
    const uint8_t* px(int x, int y) const { return rgb.data() + (static_cast<size_t>(y) * w + x) * 3; }
};

// Detects PNG or PPM by magic bytes. If notice is non-null it receives a
// human-readable note when the image needed conversion (grayscale, alpha).
Image8 read_image(const std::string& path, std::string* notice = nullptr);

void write_png(const Image8& img, const std::string& path);
void write_ppm(const Image8& img, const std::string& path);
// Dispatches on extension (.png / .ppm); rejects lossy formats.
void write_image(const Image8& img, const std::string& path);

// Same extension policy as write_image, checked without writing anything
// (lets the CLI refuse a bad --out before spending time embedding).
void validate_stego_path(const std::string& path);

// [1,3,h,w], values / 255.
Tensor image_to_tensor(const Image8& img);
// Clamps to [0,1], quantizes round-half-away-from-zero to 8 bits.
Image8 tensor_to_image(const Tensor& t, int batch_index = 0);

uint8_t quantize01(float v);

} // namespace stegnet
