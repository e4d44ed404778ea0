// Adversarial training loop: per step the discriminator learns on detached
// stego images, then embedder+extractor take a joint step on the combined
// objective (with the freshly updated discriminator providing the
// adversarial term). One discriminator step per generator step.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegnet/adam.hpp"
#include "stegnet/checkpoint.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

class Dataset {
public:
    // Loads every readable image in dir (sorted by filename). Images
    // smaller than block x block are skipped. Roughly 10% go to the
    // validation split, picked by a filename hash so the split never
    // depends on load order or RNG state.
    static Dataset load_dir(const std::string& dir, int block);

    const std::vector<Image8>& train() const { return train_; }
    const std::vector<Image8>& val() const { return val_; }
    int skipped() const { return skipped_; }

private:
    std::vector<Image8> train_, val_;
    int skipped_ = 0;
};

struct Batch {
    Tensor covers; // [b,3,B,B]
    Tensor msgs;   // [b,|M|] of 0/1
};

// Pure function of (images, cfg, batch_size, seed, epoch, step): a fresh
// without-replacement permutation each epoch, a seeded random BxB crop per
// slot, fresh random message bits. step must be < images.size()/batch_size
// (the trailing partial batch is dropped).
Batch sample_batch(const std::vector<Image8>& images, const ModelConfig& cfg,
                   int batch_size, uint64_t seed, int epoch, int step);

struct StepMetrics {
    double e, l_i, l_m, l_g; // generator objective and its terms
    double l_d;              // discriminator loss
    double ber;              // message BER on this batch (pre-quantization)
};

StepMetrics train_step(const ModelConfig& cfg, ParamStore& ps, AdamState& gen_state,
                       AdamState& disc_state, const Batch& batch);

struct EvalMetrics {
    double ber = 0.0;   // from float stego
    double ber_q = 0.0; // after 8-bit quantization
    double psnr_db = 0.0;
    double mae = 0.0;
    int images = 0;
};

// Center-crops each image to BxB, embeds seeded random messages, reports
// mean metrics. Deterministic in (ps, images, seed).
EvalMetrics evaluate(const ModelConfig& cfg, const ParamStore& ps,
                     const std::vector<Image8>& images, uint64_t seed);

struct EpochRow {
    int epoch;
    double e, l_i, l_m, l_g; // means over the epoch's steps
    double val_ber, val_psnr;
};

struct TrainRun {
    ModelConfig cfg;
    std::string data_dir;
    int epochs = 150;
    int batch_size = 30;
    int64_t max_steps = 0;   // 0 = no cap; sweeps set a budget
    std::string out_best;    // checkpoint path, written on each improvement
    std::string out_final;   // checkpoint path, written once at the end
    std::string log_csv;     // per-epoch CSV log
    bool verbose = false;    // epoch lines to stderr
};

struct TrainResult {
    Checkpoint best; // lowest val BER, ties broken by higher val PSNR
    Checkpoint last;
    std::vector<EpochRow> history;
    int64_t steps_run = 0;
};

TrainResult train(const TrainRun& run);

} // namespace stegnet
