#include "stegnet/adam.hpp"

#include <cmath>

namespace stegnet {

void adam_update(Tensor& p, const Tensor& g, Tensor& m, Tensor& v, int64_t t,
                 const AdamConfig& hp) {
    require_same_shape(p, g, "adam_update");
    require_same_shape(p, m, "adam_update moments");
    require_same_shape(p, v, "adam_update moments");
    const float bc1 = 1.0f - std::pow(hp.beta1, static_cast<float>(t));
    const float bc2 = 1.0f - std::pow(hp.beta2, static_cast<float>(t));
    for (size_t i = 0; i < p.data.size(); ++i) {
        const float gi = g.data[i];
        m.data[i] = hp.beta1 * m.data[i] + (1.0f - hp.beta1) * gi;
        v.data[i] = hp.beta2 * v.data[i] + (1.0f - hp.beta2) * gi * gi;
        const float mhat = m.data[i] / bc1;
        const float vhat = v.data[i] / bc2;
        p.data[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

void adam_step(const std::vector<ParamGrad>& updates, AdamState& st) {
    ++st.t;
    for (const auto& u : updates) {
        auto it = st.moments.find(u.name);
        if (it == st.moments.end()) {
            it = st.moments
                     .emplace(u.name, std::make_pair(Tensor(u.param->shape),
                                                     Tensor(u.param->shape)))
                     .first;
        }
        adam_update(*u.param, *u.grad, it->second.first, it->second.second, st.t, st.hp);
    }
}

} // namespace stegnet
