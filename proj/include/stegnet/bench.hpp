// Benchmarking (per-image embed/extract quality + timing) and capacity
// sweeps over (block, k, msg_bits) tuples.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stegnet/checkpoint.hpp"

namespace stegnet {

struct BenchRow {
    std::string image;
    int width = 0, height = 0, blocks = 0;
    double ber = 0.0;           // pre-quantization, interior blocks
    double ber_quantized = 0.0; // from the quantized stego PNG path
    double psnr_db = 0.0;
    double ssim = 0.0;
    double mae = 0.0;
    double embed_seconds = 0.0; // mean wall-clock per embed
};

struct BenchReport {
    std::string dataset;
    ModelConfig cfg;
    int repeats = 1;
    int images = 0, skipped = 0;
    // aggregate means over images
    double ber = 0.0, ber_quantized = 0.0, psnr_db = 0.0, ssim = 0.0, mae = 0.0;
    double bpp = 0.0;
    int64_t params = 0; // all three networks
    int64_t flops = 0;  // one embed forward per block
    double embed_seconds = 0.0;
    std::vector<BenchRow> rows;
};

// Embeds fresh random bits into every block of every image, `repeats`
// times, and measures message/image fidelity. If diff_dir is non-empty an
// amplified |cover-stego| image is written there per input image.
BenchReport bench(const Checkpoint& ck, const std::string& data_dir, int repeats,
                  uint64_t seed, const std::string& diff_dir = "", bool verbose = false);

std::string report_json(const BenchReport& r);
std::string report_text(const BenchReport& r);

struct SweepSpec {
    std::vector<std::array<int, 3>> tuples; // {block, k, msg_bits}
    std::vector<uint64_t> seeds;
    int64_t budget_steps = 200;
    int batch_size = 8;
    bool verbose = false;
};

// "B,k,M;B,k,M;..." -> tuples; throws Error naming the offending triple.
std::vector<std::array<int, 3>> parse_sweep_spec(const std::string& s);

struct SweepRow {
    int block = 0, k = 0, msg_bits = 0;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double rho = 0.0, bpp = 0.0;
    double ber = 0.0, ber_quantized = 0.0, psnr_db = 0.0, mae = 0.0;
    int64_t steps = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<std::string> notes; // hypothesis read-outs
};

// Trains each (tuple, seed) from scratch under the step budget, evaluates
// the best checkpoint on the validation split, and summarizes how BER moves
// with the capacity ratio. A failed run becomes a row with ok=false.
SweepResult sweep(const SweepSpec& spec, const std::string& data_dir);

std::string sweep_json(const SweepSpec& spec, const SweepResult& r);
std::string sweep_text(const SweepResult& r);

} // namespace stegnet
