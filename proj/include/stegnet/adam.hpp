#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/tensor.hpp"

namespace stegnet {

struct AdamConfig {
    float lr = 0.001f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// One state per optimizer instance; the trainer keeps separate states for the
// discriminator and for the embedder+extractor pair so each has its own step
// counter. Moment tensors are created on first sight of a parameter name.
struct AdamState {
    AdamConfig hp;
    int64_t t = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> moments; // name -> (m, v)
};

struct ParamGrad {
    std::string name;
    Tensor* param;
    const Tensor* grad;
};

// In-place Adam with bias correction on a single tensor.
void adam_update(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, int64_t t,
                 const AdamConfig& hp);

// Advances st.t once, then updates every listed parameter with its gradient.
void adam_step(const std::vector<ParamGrad>& updates, AdamState& st);

} // namespace stegnet
