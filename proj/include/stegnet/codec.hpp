// Whole-image steganography on top of the fixed-size network:
// covers are padded (edge replication) to a grid of BxB blocks, each block
// carries msg_bits bits, and payloads travel inside a framed bitstream
// (magic, length, CRC-32) spread over the fully-interior blocks.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegnet/checkpoint.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

// magic(2) + payload length(4) + payload CRC-32(4)
constexpr int kFrameOverheadBytes = 10;
constexpr uint8_t kFrameMagic0 = 0x4D, kFrameMagic1 = 0x53;

struct BlockLayout {
    int width = 0, height = 0, block = 0; // original dims
    int padded_w = 0, padded_h = 0;
    int blocks_x = 0, blocks_y = 0;
    std::vector<uint8_t> interior; // per block, row-major: fully inside the original image
    int interior_count = 0;

    int block_count() const { return blocks_x * blocks_y; }
};

BlockLayout plan_blocks(int w, int h, int block);

// Grows an image to new_w x new_h by replicating the last row/column.
Image8 pad_replicate(const Image8& img, int new_w, int new_h);
Image8 crop_image(const Image8& img, int w, int h);

// Payload bytes that fit: floor(interior_blocks * msg_bits / 8) - overhead.
// May be negative for tiny images.
int64_t capacity_bytes(const BlockLayout& layout, int msg_bits);

// Payload -> framed bitstream (bits are 0/1 bytes, MSB-first within bytes).
std::vector<uint8_t> frame_encode(const std::vector<uint8_t>& payload);
// Inverse; trailing filler bits are ignored. Throws IntegrityError on bad
// magic, impossible length, or CRC mismatch.
std::vector<uint8_t> frame_decode(const std::vector<uint8_t>& bits);

// Pads and cuts the image into a [N,3,B,B] tensor, blocks row-major.
Tensor tile_blocks(const Image8& img, int block, BlockLayout* layout_out = nullptr);
// Inverse: quantizes, reassembles the padded image, crops to layout dims.
Image8 untile_blocks(const Tensor& blocks, const BlockLayout& layout);

struct BlockEmbed {
    BlockLayout layout;
    Tensor stego_blocks; // [N,3,B,B], clamped to [0,1]
    Image8 stego;        // quantized and cropped to the cover size
};

// Runs the embedder over every block; block_bits must hold block_count()
// vectors of msg_bits bits each.
BlockEmbed embed_blocks(const Checkpoint& ck, const Image8& cover,
                        const std::vector<std::vector<uint8_t>>& block_bits);

// Extractor over every block of a [N,3,B,B] tensor.
std::vector<std::vector<uint8_t>> extract_block_bits(const Checkpoint& ck, const Tensor& blocks);
// Same, from an image (pads exactly like embedding did).
std::vector<std::vector<uint8_t>> extract_blocks(const Checkpoint& ck, const Image8& stego);

struct EmbedStats {
    int64_t frame_bits = 0;
    int64_t available_bits = 0; // interior blocks * msg_bits
    int64_t capacity_bytes = 0;
    int blocks_total = 0;
    int blocks_interior = 0;
    double psnr_db = 0.0; // cover vs quantized stego
};

// Frames the payload, spreads it across interior blocks (row-major), fills
// everything else with seeded random bits. Throws DataError when the
// payload does not fit.
Image8 embed_message(const Checkpoint& ck, const Image8& cover,
                     const std::vector<uint8_t>& payload, uint64_t filler_seed,
                     EmbedStats* stats = nullptr);

std::vector<uint8_t> extract_message(const Checkpoint& ck, const Image8& stego);

} // namespace stegnet
