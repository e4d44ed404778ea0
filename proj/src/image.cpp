#include "stegnet/image.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "stegnet/common.hpp"

namespace stegnet {
namespace {

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0);
    std::vector<uint8_t> buf(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw DataError("cannot read file: " + path);
    return buf;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw DataError("write failed: " + path);
}

uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

constexpr uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// In-place defilter of one scanline. prev is the defiltered previous row
// (all zeros for the first row).
void defilter_row(uint8_t filter, uint8_t* row, const uint8_t* prev, size_t len, int bpp) {
    switch (filter) {
        case 0: break;
        case 1:
            for (size_t i = size_t(bpp); i < len; ++i) row[i] = uint8_t(row[i] + row[i - bpp]);
            break;
        case 2:
            for (size_t i = 0; i < len; ++i) row[i] = uint8_t(row[i] + prev[i]);
            break;
        case 3:
            for (size_t i = 0; i < len; ++i) {
                int left = i >= size_t(bpp) ? row[i - bpp] : 0;
                row[i] = uint8_t(row[i] + (left + prev[i]) / 2);
            }
            break;
        case 4:
            for (size_t i = 0; i < len; ++i) {
                int left = i >= size_t(bpp) ? row[i - bpp] : 0;
                int ul = i >= size_t(bpp) ? prev[i - bpp] : 0;
                row[i] = uint8_t(row[i] + paeth(left, prev[i], ul));
            }
            break;
        default: throw DataError("PNG: unknown filter type " + std::to_string(filter));
    }
}

Image8 decode_png(const std::vector<uint8_t>& file, std::string* notice) {
    if (file.size() < 8 + 12 || std::memcmp(file.data(), kPngSig, 8) != 0)
        throw DataError("not a PNG file");

    uint32_t width = 0, height = 0;
    int depth = 0, color = 0;
    bool have_ihdr = false;
    std::vector<uint8_t> idat;

    size_t pos = 8;
    while (pos + 12 <= file.size()) {
        uint32_t len = be32(&file[pos]);
        if (pos + 12 + len > file.size()) throw DataError("PNG: truncated chunk");
        const uint8_t* type = &file[pos + 4];
        const uint8_t* data = &file[pos + 8];
        uint32_t crc_stored = be32(&file[pos + 8 + len]);
        uint32_t crc_calc = crc32(crc32(0, nullptr, 0), type, len + 4);
        if (crc_stored != crc_calc) throw DataError("PNG: chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError("PNG: bad IHDR");
            width = be32(data);
            height = be32(data + 4);
            depth = data[8];
            color = data[9];
            if (data[10] != 0) throw DataError("PNG: unsupported compression method");
            if (data[11] != 0) throw DataError("PNG: unsupported filter method");
            if (data[12] != 0) throw DataError("PNG: interlaced images are not supported");
            have_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        // ancillary chunks are skipped
        pos += 12 + len;
    }

    if (!have_ihdr) throw DataError("PNG: missing IHDR");
    if (width == 0 || height == 0) throw DataError("PNG: empty image");
    if (width > 1u << 20 || height > 1u << 20) throw DataError("PNG: unreasonable dimensions");
    if (depth != 8) throw DataError("PNG: only 8-bit depth is supported (got " + std::to_string(depth) + ")");
    int channels;
    switch (color) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        case 3: throw DataError("PNG: palette images are not supported");
        default: throw DataError("PNG: unknown color type " + std::to_string(color));
    }
    if (idat.empty()) throw DataError("PNG: missing image data");

    size_t stride = size_t(width) * channels;
    size_t raw_size = height * (stride + 1);
    std::vector<uint8_t> raw(raw_size);
    uLongf dst_len = raw_size;
    int zrc = uncompress(raw.data(), &dst_len, idat.data(), idat.size());
    if (zrc != Z_OK || dst_len != raw_size) throw DataError("PNG: corrupt compressed data");

    Image8 img(static_cast<int>(width), static_cast<int>(height));
    std::vector<uint8_t> prev(stride, 0);
    for (uint32_t y = 0; y < height; ++y) {
        uint8_t* row = &raw[y * (stride + 1)];
        uint8_t filter = row[0];
        defilter_row(filter, row + 1, prev.data(), stride, channels);
        std::memcpy(prev.data(), row + 1, stride);
        uint8_t* out = img.px(0, int(y));
        const uint8_t* in = row + 1;
        switch (channels) {
            case 1:
                for (uint32_t x = 0; x < width; ++x) { out[0] = out[1] = out[2] = in[x]; out += 3; }
                break;
            case 2:
                for (uint32_t x = 0; x < width; ++x) { out[0] = out[1] = out[2] = in[2 * x]; out += 3; }
                break;
            case 3:
                std::memcpy(out, in, stride);
                break;
            case 4:
                for (uint32_t x = 0; x < width; ++x) { out[0] = in[4 * x]; out[1] = in[4 * x + 1]; out[2] = in[4 * x + 2]; out += 3; }
                break;
        }
    }
    if (notice) {
        if (color == 0 || color == 4) *notice = "grayscale input replicated to RGB";
        else if (color == 6) *notice = "alpha channel dropped";
        else notice->clear();
    }
    return img;
}

void skip_ppm_space(const std::vector<uint8_t>& b, size_t& i) {
    while (i < b.size()) {
        if (std::isspace(b[i])) { ++i; continue; }
        if (b[i] == '#') { while (i < b.size() && b[i] != '\n') ++i; continue; }
        break;
    }
}

long read_ppm_int(const std::vector<uint8_t>& b, size_t& i) {
    skip_ppm_space(b, i);
    if (i >= b.size() || !std::isdigit(b[i])) throw DataError("PPM: malformed header");
    long v = 0;
    while (i < b.size() && std::isdigit(b[i])) {
        v = v * 10 + (b[i] - '0');
        if (v > 1 << 20) throw DataError("PPM: unreasonable header value");
        ++i;
    }
    return v;
}

Image8 decode_ppm(const std::vector<uint8_t>& file) {
    size_t i = 2; // past "P6"
    long w = read_ppm_int(file, i);
    long h = read_ppm_int(file, i);
    long maxval = read_ppm_int(file, i);
    if (w <= 0 || h <= 0) throw DataError("PPM: empty image");
    if (maxval != 255) throw DataError("PPM: only maxval 255 is supported");
    if (i >= file.size() || !std::isspace(file[i])) throw DataError("PPM: malformed header");
    ++i; // single whitespace before raster
    size_t need = size_t(w) * size_t(h) * 3;
    if (file.size() - i < need) throw DataError("PPM: truncated pixel data");
    Image8 img(static_cast<int>(w), static_cast<int>(h));
    std::memcpy(img.rgb.data(), file.data() + i, need);
    return img;
}

std::string lower_ext(const std::string& path) {
    size_t dot = path.find_last_of('.');
    if (dot == std::string::npos) return "";
    std::string e = path.substr(dot);
    for (char& c : e) c = char(std::tolower(c));
    return e;
}

} // namespace

Image8 read_image(const std::string& path, std::string* notice) {
    if (notice) notice->clear();
    std::vector<uint8_t> file = read_file(path);
    if (file.size() >= 8 && std::memcmp(file.data(), kPngSig, 8) == 0) return decode_png(file, notice);
    if (file.size() >= 2 && file[0] == 'P' && file[1] == '6') return decode_ppm(file);
    throw DataError("unsupported image format (PNG and PPM P6 are supported): " + path);
}

void write_png(const Image8& img, const std::string& path) {
    if (img.w <= 0 || img.h <= 0 || img.rgb.size() != size_t(img.w) * img.h * 3)
        throw ShapeError("write_png: malformed image");

    size_t stride = size_t(img.w) * 3;
    std::vector<uint8_t> raw(size_t(img.h) * (stride + 1));
    for (int y = 0; y < img.h; ++y) {
        uint8_t* row = &raw[size_t(y) * (stride + 1)];
        row[0] = 0; // filter: None
        std::memcpy(row + 1, img.px(0, y), stride);
    }

    uLongf comp_cap = compressBound(raw.size());
    std::vector<uint8_t> comp(comp_cap);
    int zrc = compress2(comp.data(), &comp_cap, raw.data(), raw.size(), Z_BEST_COMPRESSION);
    if (zrc != Z_OK) throw Error("write_png: deflate failed");
    comp.resize(comp_cap);

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);
    auto chunk = [&out](const char* type, const std::vector<uint8_t>& data) {
        push_be32(out, uint32_t(data.size()));
        size_t type_at = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        uint32_t crc = crc32(crc32(0, nullptr, 0), &out[type_at], uInt(4 + data.size()));
        push_be32(out, crc);
    };

    std::vector<uint8_t> ihdr;
    push_be32(ihdr, uint32_t(img.w));
    push_be32(ihdr, uint32_t(img.h));
    ihdr.push_back(8);  // depth
    ihdr.push_back(2);  // color: RGB
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter
    ihdr.push_back(0);  // interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", comp);
    chunk("IEND", {});
    write_file(path, out);
}

void write_ppm(const Image8& img, const std::string& path) {
    if (img.w <= 0 || img.h <= 0 || img.rgb.size() != size_t(img.w) * img.h * 3)
        throw ShapeError("write_ppm: malformed image");
    char head[64];
    int n = std::snprintf(head, sizeof head, "P6\n%d %d\n255\n", img.w, img.h);
    std::vector<uint8_t> out(head, head + n);
    out.insert(out.end(), img.rgb.begin(), img.rgb.end());
    write_file(path, out);
}

void validate_stego_path(const std::string& path) {
    std::string ext = lower_ext(path);
    if (ext == ".png" || ext == ".ppm") return;
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".webp" || ext == ".gif" || ext == ".bmp" || ext == ".tif" || ext == ".tiff")
        throw DataError("refusing lossy/unsupported output format '" + ext + "': stego images must be stored losslessly (.png or .ppm)");
    throw DataError("unknown output image format '" + ext + "' (use .png or .ppm)");
}

void write_image(const Image8& img, const std::string& path) {
    validate_stego_path(path);
    if (lower_ext(path) == ".png") write_png(img, path);
    else write_ppm(img, path);
}

Tensor image_to_tensor(const Image8& img) {
    if (img.w <= 0 || img.h <= 0 || img.rgb.size() != size_t(img.w) * img.h * 3)
        throw ShapeError("image_to_tensor: malformed image");
    Tensor t({1, 3, img.h, img.w});
    size_t plane = size_t(img.h) * img.w;
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            t.data[c * plane + p] = float(img.rgb[p * 3 + c]) / 255.0f;
    return t;
}

uint8_t quantize01(float v) {
    if (!(v > 0.0f)) v = 0.0f; // also catches NaN
    if (v > 1.0f) v = 1.0f;
    float q = std::floor(v * 255.0f + 0.5f);
    return q >= 255.0f ? uint8_t(255) : uint8_t(q);
}

Image8 tensor_to_image(const Tensor& t, int batch_index) {
    if (t.ndim() != 4 || t.dim(1) != 3) throw ShapeError("tensor_to_image: expected [b,3,h,w], got " + shape_str(t.shape));
    if (batch_index < 0 || batch_index >= t.dim(0)) throw ShapeError("tensor_to_image: batch index out of range");
    int h = t.dim(2), w = t.dim(3);
    Image8 img(w, h);
    size_t plane = size_t(h) * w;
    const float* base = t.data.data() + size_t(batch_index) * 3 * plane;
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            img.rgb[p * 3 + c] = quantize01(base[c * plane + p]);
    return img;
}

} // namespace stegnet
