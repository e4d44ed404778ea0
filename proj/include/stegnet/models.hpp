// The three networks: embedder (autoencoder with message channels injected at
// the bottleneck), extractor (conv stack -> pooled logits) and discriminator
// (conv stack -> cover probability), all generated from one ModelConfig.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stegnet/tape.hpp"
#include "stegnet/tensor.hpp"

namespace stegnet {

struct ModelConfig {
    int block = 128;   // B, cover block size in pixels
    int k = 4;         // number of stride-2 stages
    int msg_bits = 64; // |M|
    float lambda_i = 1.0f;
    float lambda_m = 1.5f;
    float lambda_g = 0.001f;
    float lr = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    uint64_t seed = 1;

    // Throws ShapeError unless k >= 1, msg_bits >= 1, and block is a
    // multiple of 2^k (so the encoder halves it exactly k times).
    void validate() const;

    int latent_hw() const { return block >> k; }            // B / 2^k
    int feature_channels() const { return 1 << (2 * k); }   // (2^k)^2
};

struct FeatureCapacity {
    int k = 0;
    int msg_bits = 0;
    int64_t f_c = 0; // (2^k)^2 feature channels at the bottleneck
    int64_t m_c = 0; // message channels, equals |M|
    double rho = 0.0;
};

FeatureCapacity feature_capacity(int k, int msg_bits);

// Embedded bits per subpixel for one B x B RGB block.
double bits_per_pixel(int block, int msg_bits);

// Named parameter tensors with deterministic (insertion) iteration order.
class ParamStore {
public:
    Tensor& add(std::string name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const;
    size_t size() const { return items_.size(); }
    int64_t total_elems() const;

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, size_t> index_;
};

// Encoder conv widths 2^(k+1) .. 2^(2k): doubling each stage and landing on
// exactly (2^k)^2 bottleneck channels.
std::vector<int> encoder_channels(const ModelConfig& cfg);
// Decoder widths mirror the encoder back down, ending at the 3-channel residual.
std::vector<int> decoder_channels(const ModelConfig& cfg);

// Every parameter tensor's name and shape, in store order.
std::vector<std::pair<std::string, std::vector<int>>> param_shapes(const ModelConfig& cfg);

// Kaiming-init parameters for all three networks, seeded from cfg.seed.
ParamStore init_params(const ModelConfig& cfg);

// Parameters registered as leaves on a tape, for one forward/backward pass.
struct TapeParams {
    std::vector<std::pair<std::string, Tape::Var>> ordered;
    Tape::Var at(const std::string& name) const;
};
TapeParams bind_params(Tape& t, const ParamStore& ps);

// cover [b,3,B,B] in [0,1], msg [b,|M|] in {0,1} -> stego [b,3,B,B]
// (unclamped; clamp to [0,1] at inference via embed_batch).
Tape::Var embedder_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                           Tape::Var cover, Tape::Var msg);
// image [b,3,B,B] -> logits [b,|M|]
Tape::Var extractor_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                            Tape::Var image);
// image [b,3,B,B] -> cover probability [b,1] in (0,1)
Tape::Var discriminator_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                                Tape::Var image);

struct LossVars {
    Tape::Var e, l_i, l_m, l_g;
};
// E = lambda_i * mse(C,C') + lambda_m * mse(M, sigmoid(M' logits))
//   + lambda_g * mean log(1 - p_stego)
LossVars total_loss_graph(Tape& t, const ModelConfig& cfg, Tape::Var cover, Tape::Var stego,
                          Tape::Var msg, Tape::Var msg_logits, Tape::Var p_stego);

struct LossValues {
    double e, l_i, l_m, l_g;
};
LossValues total_loss(const ModelConfig& cfg, const Tensor& cover, const Tensor& stego,
                      const Tensor& msg, const Tensor& msg_logits, const Tensor& p_stego);

// Tape-free inference wrappers.
Tensor embed_batch(const ModelConfig& cfg, const ParamStore& ps, const Tensor& covers,
                   const Tensor& msgs, bool clamp01 = true);
Tensor extract_logits_batch(const ModelConfig& cfg, const ParamStore& ps, const Tensor& images);

// sigmoid(logit) > 0.5 -> 1, row-major over the batch.
std::vector<uint8_t> decode_bits(const Tensor& logits);

struct Complexity {
    int64_t params = 0; // all three networks
    int64_t flops = 0;  // 2 x multiply-accumulates, one embed forward per block
};
Complexity model_complexity(const ModelConfig& cfg);

} // namespace stegnet
