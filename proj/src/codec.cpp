#include "stegnet/codec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>

#include "stegnet/common.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/rng.hpp"

namespace stegnet {
namespace {

void append_le32_bytes(std::vector<uint8_t>& v, uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(uint8_t(x >> (8 * i)));
}

uint32_t payload_crc(const std::vector<uint8_t>& payload) {
    return crc32(crc32(0, nullptr, 0), payload.data(), uInt(payload.size()));
}

// Forward batches are chunked so tape memory stays modest regardless of
// how many blocks a large cover produces.
int forward_chunk(const ModelConfig& cfg) {
    size_t half = size_t(cfg.block) / 2;
    size_t per_item_bytes = 16 * (size_t(1) << (cfg.k + 1)) * half * half;
    size_t chunk = (size_t(1) << 26) / std::max<size_t>(per_item_bytes, 1);
    return int(std::clamp<size_t>(chunk, 1, 64));
}

Tensor slice_rows(const Tensor& t, int i0, int i1) {
    std::vector<int> shape = t.shape;
    shape[0] = i1 - i0;
    Tensor out(shape);
    size_t stride = t.numel() / t.dim(0);
    std::copy_n(t.data.begin() + size_t(i0) * stride, out.data.size(), out.data.begin());
    return out;
}

} // namespace

BlockLayout plan_blocks(int w, int h, int block) {
    if (w < 1 || h < 1) throw ShapeError("plan_blocks: empty image");
    if (block < 1) throw ShapeError("plan_blocks: block size must be positive");
    BlockLayout L;
    L.width = w;
    L.height = h;
    L.block = block;
    L.blocks_x = (w + block - 1) / block;
    L.blocks_y = (h + block - 1) / block;
    L.padded_w = L.blocks_x * block;
    L.padded_h = L.blocks_y * block;
    L.interior.resize(size_t(L.blocks_x) * L.blocks_y);
    for (int by = 0; by < L.blocks_y; ++by)
        for (int bx = 0; bx < L.blocks_x; ++bx) {
            bool in = (bx + 1) * block <= w && (by + 1) * block <= h;
            L.interior[size_t(by) * L.blocks_x + bx] = in ? 1 : 0;
            if (in) ++L.interior_count;
        }
    return L;
}

Image8 pad_replicate(const Image8& img, int new_w, int new_h) {
    if (new_w < img.w || new_h < img.h) throw ShapeError("pad_replicate: target smaller than image");
    Image8 out(new_w, new_h);
    for (int y = 0; y < new_h; ++y) {
        int sy = std::min(y, img.h - 1);
        const uint8_t* src = img.px(0, sy);
        uint8_t* dst = out.px(0, y);
        std::memcpy(dst, src, size_t(img.w) * 3);
        const uint8_t* last = src + size_t(img.w - 1) * 3;
        for (int x = img.w; x < new_w; ++x) {
            dst[size_t(x) * 3 + 0] = last[0];
            dst[size_t(x) * 3 + 1] = last[1];
            dst[size_t(x) * 3 + 2] = last[2];
        }
    }
    return out;
}

Image8 crop_image(const Image8& img, int w, int h) {
    if (w > img.w || h > img.h || w < 1 || h < 1) throw ShapeError("crop_image: bad crop size");
    Image8 out(w, h);
    for (int y = 0; y < h; ++y) std::memcpy(out.px(0, y), img.px(0, y), size_t(w) * 3);
    return out;
}

int64_t capacity_bytes(const BlockLayout& layout, int msg_bits) {
    return int64_t(layout.interior_count) * msg_bits / 8 - kFrameOverheadBytes;
}

std::vector<uint8_t> frame_encode(const std::vector<uint8_t>& payload) {
    if (payload.size() > 0xFFFFFFFFull) throw DataError("payload too large to frame");
    std::vector<uint8_t> bytes;
    bytes.reserve(payload.size() + kFrameOverheadBytes);
    bytes.push_back(kFrameMagic0);
    bytes.push_back(kFrameMagic1);
    append_le32_bytes(bytes, uint32_t(payload.size()));
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    append_le32_bytes(bytes, payload_crc(payload));

    std::vector<uint8_t> bits;
    bits.reserve(bytes.size() * 8);
    for (uint8_t by : bytes)
        for (int i = 7; i >= 0; --i) bits.push_back((by >> i) & 1);
    return bits;
}

std::vector<uint8_t> frame_decode(const std::vector<uint8_t>& bits) {
    size_t avail_bytes = bits.size() / 8;
    if (avail_bytes < kFrameOverheadBytes)
        throw IntegrityError("not a stego frame: only " + std::to_string(bits.size()) +
                             " bits present, header needs " + std::to_string(kFrameOverheadBytes * 8));
    auto byte_at = [&bits](size_t i) {
        uint8_t b = 0;
        for (int j = 0; j < 8; ++j) b = uint8_t((b << 1) | (bits[i * 8 + j] ? 1 : 0));
        return b;
    };
    if (byte_at(0) != kFrameMagic0 || byte_at(1) != kFrameMagic1)
        throw IntegrityError("not a stego frame (bad magic)");
    uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len |= uint32_t(byte_at(2 + i)) << (8 * i);
    if (uint64_t(len) + kFrameOverheadBytes > avail_bytes)
        throw IntegrityError("stego frame declares " + std::to_string(len) +
                             " payload bytes but only " + std::to_string(avail_bytes - kFrameOverheadBytes) +
                             " fit in the image (frame corrupted or wrong image)");
    std::vector<uint8_t> payload(len);
    for (uint32_t i = 0; i < len; ++i) payload[i] = byte_at(6 + i);
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= uint32_t(byte_at(6 + len + i)) << (8 * i);
    uint32_t calc = payload_crc(payload);
    if (stored != calc) {
        int suspect = std::popcount(stored ^ calc);
        throw IntegrityError("corrupted message: payload CRC mismatch (" + std::to_string(suspect) +
                             " checksum bits differ)");
    }
    return payload;
}

Tensor tile_blocks(const Image8& img, int block, BlockLayout* layout_out) {
    BlockLayout L = plan_blocks(img.w, img.h, block);
    Image8 padded = pad_replicate(img, L.padded_w, L.padded_h);
    Tensor blocks({L.block_count(), 3, block, block});
    size_t plane = size_t(block) * block;
    for (int by = 0; by < L.blocks_y; ++by)
        for (int bx = 0; bx < L.blocks_x; ++bx) {
            float* dst = blocks.data.data() + (size_t(by) * L.blocks_x + bx) * 3 * plane;
            for (int y = 0; y < block; ++y) {
                const uint8_t* src = padded.px(bx * block, by * block + y);
                for (int x = 0; x < block; ++x)
                    for (int c = 0; c < 3; ++c)
                        dst[c * plane + size_t(y) * block + x] = float(src[x * 3 + c]) / 255.0f;
            }
        }
    if (layout_out) *layout_out = L;
    return blocks;
}

Image8 untile_blocks(const Tensor& blocks, const BlockLayout& L) {
    if (blocks.ndim() != 4 || blocks.dim(0) != L.block_count() || blocks.dim(1) != 3 ||
        blocks.dim(2) != L.block || blocks.dim(3) != L.block)
        throw ShapeError("untile_blocks: tensor does not match layout, got " + shape_str(blocks.shape));
    Image8 padded(L.padded_w, L.padded_h);
    int B = L.block;
    size_t plane = size_t(B) * B;
    for (int by = 0; by < L.blocks_y; ++by)
        for (int bx = 0; bx < L.blocks_x; ++bx) {
            const float* src = blocks.data.data() + (size_t(by) * L.blocks_x + bx) * 3 * plane;
            for (int y = 0; y < B; ++y) {
                uint8_t* dst = padded.px(bx * B, by * B + y);
                for (int x = 0; x < B; ++x)
                    for (int c = 0; c < 3; ++c)
                        dst[x * 3 + c] = quantize01(src[c * plane + size_t(y) * B + x]);
            }
        }
    return crop_image(padded, L.width, L.height);
}

BlockEmbed embed_blocks(const Checkpoint& ck, const Image8& cover,
                        const std::vector<std::vector<uint8_t>>& block_bits) {
    const ModelConfig& cfg = ck.cfg;
    BlockEmbed out;
    Tensor covers = tile_blocks(cover, cfg.block, &out.layout);
    int n = out.layout.block_count();
    if (int(block_bits.size()) != n)
        throw ShapeError("embed_blocks: expected " + std::to_string(n) + " bit vectors, got " +
                         std::to_string(block_bits.size()));

    Tensor msgs({n, cfg.msg_bits});
    for (int i = 0; i < n; ++i) {
        if (int(block_bits[i].size()) != cfg.msg_bits)
            throw ShapeError("embed_blocks: block " + std::to_string(i) + " has " +
                             std::to_string(block_bits[i].size()) + " bits, model carries " +
                             std::to_string(cfg.msg_bits));
        for (int j = 0; j < cfg.msg_bits; ++j)
            msgs.data[size_t(i) * cfg.msg_bits + j] = block_bits[i][j] ? 1.0f : 0.0f;
    }

    out.stego_blocks = Tensor({n, 3, cfg.block, cfg.block});
    size_t item = size_t(3) * cfg.block * cfg.block;
    int chunk = forward_chunk(cfg);
    for (int i0 = 0; i0 < n; i0 += chunk) {
        int i1 = std::min(n, i0 + chunk);
        Tensor s = embed_batch(cfg, ck.params, slice_rows(covers, i0, i1), slice_rows(msgs, i0, i1), true);
        std::copy_n(s.data.begin(), s.data.size(), out.stego_blocks.data.begin() + size_t(i0) * item);
    }
    out.stego = untile_blocks(out.stego_blocks, out.layout);
    return out;
}

std::vector<std::vector<uint8_t>> extract_block_bits(const Checkpoint& ck, const Tensor& blocks) {
    const ModelConfig& cfg = ck.cfg;
    if (blocks.ndim() != 4 || blocks.dim(1) != 3 || blocks.dim(2) != cfg.block || blocks.dim(3) != cfg.block)
        throw ShapeError("extract_block_bits: expected [n,3," + std::to_string(cfg.block) + "," +
                         std::to_string(cfg.block) + "], got " + shape_str(blocks.shape));
    int n = blocks.dim(0);
    std::vector<std::vector<uint8_t>> out(static_cast<size_t>(n));
    int chunk = forward_chunk(cfg);
    for (int i0 = 0; i0 < n; i0 += chunk) {
        int i1 = std::min(n, i0 + chunk);
        Tensor logits = extract_logits_batch(cfg, ck.params, slice_rows(blocks, i0, i1));
        for (int i = i0; i < i1; ++i) {
            out[size_t(i)].resize(cfg.msg_bits);
            for (int j = 0; j < cfg.msg_bits; ++j)
                out[size_t(i)][j] = logits.data[size_t(i - i0) * cfg.msg_bits + j] > 0.0f ? 1 : 0;
        }
    }
    return out;
}

std::vector<std::vector<uint8_t>> extract_blocks(const Checkpoint& ck, const Image8& stego) {
    Tensor blocks = tile_blocks(stego, ck.cfg.block, nullptr);
    return extract_block_bits(ck, blocks);
}

Image8 embed_message(const Checkpoint& ck, const Image8& cover,
                     const std::vector<uint8_t>& payload, uint64_t filler_seed,
                     EmbedStats* stats) {
    const ModelConfig& cfg = ck.cfg;
    BlockLayout L = plan_blocks(cover.w, cover.h, cfg.block);
    std::vector<uint8_t> frame = frame_encode(payload);
    int64_t available = int64_t(L.interior_count) * cfg.msg_bits;
    if (int64_t(frame.size()) > available)
        throw DataError("message does not fit: payload plus framing needs " + std::to_string(frame.size()) +
                        " bits but this cover provides " + std::to_string(available) + " (capacity " +
                        std::to_string(std::max<int64_t>(capacity_bytes(L, cfg.msg_bits), 0)) + " bytes)");

    std::vector<std::vector<uint8_t>> block_bits(size_t(L.block_count()));
    int interior_idx = 0;
    for (int bi = 0; bi < L.block_count(); ++bi) {
        Rng filler(mix_seed(filler_seed, 0xF117ED, uint64_t(bi)));
        auto& bits = block_bits[size_t(bi)];
        bits.resize(cfg.msg_bits);
        int64_t base = -1;
        if (L.interior[size_t(bi)]) {
            base = int64_t(interior_idx) * cfg.msg_bits;
            ++interior_idx;
        }
        for (int j = 0; j < cfg.msg_bits; ++j) {
            int64_t pos = base >= 0 ? base + j : -1;
            if (pos >= 0 && pos < int64_t(frame.size())) bits[j] = frame[size_t(pos)];
            else bits[j] = uint8_t(filler.coin());
        }
    }

    BlockEmbed be = embed_blocks(ck, cover, block_bits);
    if (stats) {
        stats->frame_bits = int64_t(frame.size());
        stats->available_bits = available;
        stats->capacity_bytes = capacity_bytes(L, cfg.msg_bits);
        stats->blocks_total = L.block_count();
        stats->blocks_interior = L.interior_count;
        stats->psnr_db = psnr_u8(cover, be.stego);
    }
    return be.stego;
}

std::vector<uint8_t> extract_message(const Checkpoint& ck, const Image8& stego) {
    BlockLayout L = plan_blocks(stego.w, stego.h, ck.cfg.block);
    auto block_bits = extract_blocks(ck, stego);
    std::vector<uint8_t> bits;
    bits.reserve(size_t(L.interior_count) * ck.cfg.msg_bits);
    for (int bi = 0; bi < L.block_count(); ++bi)
        if (L.interior[size_t(bi)])
            bits.insert(bits.end(), block_bits[size_t(bi)].begin(), block_bits[size_t(bi)].end());
    return frame_decode(bits);
}

} // namespace stegnet
