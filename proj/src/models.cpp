#include "stegnet/models.hpp"

#include <algorithm>
#include <cmath>

#include "stegnet/rng.hpp"

namespace stegnet {

void ModelConfig::validate() const {
    if (k < 1) throw ShapeError("config: k must be >= 1");
    if (msg_bits < 1) throw ShapeError("config: msg_bits must be >= 1");
    if (block < (1 << k) || block % (1 << k) != 0)
        throw ShapeError("config: block " + std::to_string(block) +
                         " must be a positive multiple of 2^k = " + std::to_string(1 << k));
    if (lr < 0.0f) throw ShapeError("config: negative learning rate");
}

FeatureCapacity feature_capacity(int k, int msg_bits) {
    if (k < 1 || msg_bits < 1) throw ShapeError("feature_capacity: k and msg_bits must be >= 1");
    FeatureCapacity fc;
    fc.k = k;
    fc.msg_bits = msg_bits;
    fc.f_c = int64_t{1} << (2 * k);
    fc.m_c = msg_bits;
    fc.rho = static_cast<double>(msg_bits) / static_cast<double>(fc.f_c);
    return fc;
}

double bits_per_pixel(int block, int msg_bits) {
    return static_cast<double>(msg_bits) / (static_cast<double>(block) * block * 3.0);
}

Tensor& ParamStore::add(std::string name, Tensor t) {
    if (index_.count(name)) throw Error("duplicate parameter name: " + name);
    index_.emplace(name, items_.size());
    items_.emplace_back(std::move(name), std::move(t));
    return items_.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter: " + name);
    return items_[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error("unknown parameter: " + name);
    return items_[it->second].second;
}

bool ParamStore::contains(const std::string& name) const { return index_.count(name) != 0; }

int64_t ParamStore::total_elems() const {
    int64_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
}

std::vector<int> encoder_channels(const ModelConfig& cfg) {
    std::vector<int> ch{3};
    for (int i = 1; i <= cfg.k; ++i) ch.push_back(1 << (cfg.k + i));
    return ch;
}

std::vector<int> decoder_channels(const ModelConfig& cfg) {
    std::vector<int> ch{cfg.feature_channels() + cfg.msg_bits};
    for (int i = 1; i < cfg.k; ++i) ch.push_back(1 << (2 * cfg.k - i));
    ch.push_back(3);
    return ch;
}

std::vector<std::pair<std::string, std::vector<int>>> param_shapes(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::string, std::vector<int>>> out;
    const auto enc = encoder_channels(cfg);
    const auto dec = decoder_channels(cfg);

    for (int i = 0; i < cfg.k; ++i) {
        const std::string base = "embedder.enc." + std::to_string(i);
        out.emplace_back(base + ".weight", std::vector<int>{enc[i + 1], enc[i], 3, 3});
        out.emplace_back(base + ".bias", std::vector<int>{enc[i + 1]});
    }
    for (int i = 0; i < cfg.k; ++i) {
        const std::string base = "embedder.dec." + std::to_string(i);
        out.emplace_back(base + ".weight", std::vector<int>{dec[i], dec[i + 1], 3, 3});
        out.emplace_back(base + ".bias", std::vector<int>{dec[i + 1]});
    }
    out.emplace_back("embedder.blend.weight", std::vector<int>{3, 3, 3, 3});
    out.emplace_back("embedder.blend.bias", std::vector<int>{3});

    for (const std::string net : {"extractor", "discriminator"}) {
        for (int i = 0; i < cfg.k; ++i) {
            const std::string base = net + ".conv." + std::to_string(i);
            out.emplace_back(base + ".weight", std::vector<int>{enc[i + 1], enc[i], 3, 3});
            out.emplace_back(base + ".bias", std::vector<int>{enc[i + 1]});
        }
        const int heads = net == "extractor" ? cfg.msg_bits : 1;
        out.emplace_back(net + ".head.weight",
                         std::vector<int>{heads, cfg.feature_channels()});
        out.emplace_back(net + ".head.bias", std::vector<int>{heads});
    }
    return out;
}

ParamStore init_params(const ModelConfig& cfg) {
    ParamStore ps;
    Rng rng(cfg.seed);
    for (auto& [name, shape] : param_shapes(cfg)) {
        Tensor t(shape);
        if (shape.size() >= 2) {
            // fan-in over dim 1 (and the 3x3 taps for conv-shaped tensors)
            int64_t fan_in = shape[1];
            for (size_t d = 2; d < shape.size(); ++d) fan_in *= shape[d];
            const float std_dev = std::sqrt(2.0f / static_cast<float>(fan_in));
            for (auto& v : t.data) v = std_dev * rng.normal();
        }
        // 1-D tensors are biases, left at zero
        ps.add(name, std::move(t));
    }

    // Residual-friendly start: the blend conv opens as the identity mix and
    // the residual-producing decoder stage opens damped, so the first stegos
    // already resemble their covers and training spends its budget on the
    // message rather than on rediscovering the identity map.
    Tensor& blend = ps.at("embedder.blend.weight");
    std::fill(blend.data.begin(), blend.data.end(), 0.0f);
    for (int o = 0; o < 3; ++o) blend.data[((o * 3 + o) * 3 + 1) * 3 + 1] = 1.0f;
    for (auto& v : ps.at("embedder.dec." + std::to_string(cfg.k - 1) + ".weight").data)
        v *= 0.05f;
    return ps;
}

TapeParams bind_params(Tape& t, const ParamStore& ps) {
    TapeParams tp;
    tp.ordered.reserve(ps.size());
    for (const auto& [name, tensor] : ps.items()) tp.ordered.emplace_back(name, t.leaf(tensor));
    return tp;
}

Tape::Var TapeParams::at(const std::string& name) const {
    for (const auto& [n, v] : ordered)
        if (n == name) return v;
    throw Error("unbound parameter: " + name);
}

namespace {

void check_image_input(const Tensor& img, const ModelConfig& cfg, const char* who) {
    if (img.ndim() != 4 || img.dim(1) != 3 || img.dim(2) != cfg.block || img.dim(3) != cfg.block)
        throw ShapeError(std::string(who) + ": expected [b,3," + std::to_string(cfg.block) + "," +
                         std::to_string(cfg.block) + "] input, got " + shape_str(img.shape));
}

// Shared conv trunk of the extractor and discriminator.
Tape::Var conv_trunk(Tape& t, const ModelConfig& cfg, const TapeParams& P, Tape::Var image,
                     const std::string& net) {
    Tape::Var h = image;
    for (int i = 0; i < cfg.k; ++i) {
        const std::string base = net + ".conv." + std::to_string(i);
        h = ops::relu(t, ops::conv2d(t, h, P.at(base + ".weight"), P.at(base + ".bias"), 2));
    }
    return ops::global_avg_pool(t, h);
}

} // namespace

Tape::Var embedder_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                           Tape::Var cover, Tape::Var msg) {
    check_image_input(t.value(cover), cfg, "embedder");
    const Tensor& mv = t.value(msg);
    if (mv.ndim() != 2 || mv.dim(1) != cfg.msg_bits)
        throw ShapeError("embedder: expected [b," + std::to_string(cfg.msg_bits) +
                         "] message, got " + shape_str(mv.shape));
    if (mv.dim(0) != t.value(cover).dim(0))
        throw ShapeError("embedder: cover/message batch mismatch");

    Tape::Var h = cover;
    for (int i = 0; i < cfg.k; ++i) {
        const std::string base = "embedder.enc." + std::to_string(i);
        h = ops::relu(t, ops::conv2d(t, h, P.at(base + ".weight"), P.at(base + ".bias"), 2));
    }
    h = ops::concat_channels(t, h, ops::replicate_plane(t, msg, cfg.latent_hw()));
    for (int i = 0; i < cfg.k; ++i) {
        const std::string base = "embedder.dec." + std::to_string(i);
        h = ops::conv_transpose2d(t, h, P.at(base + ".weight"), P.at(base + ".bias"));
        if (i + 1 < cfg.k) h = ops::relu(t, h); // last stage stays linear: it is the residual
    }
    Tape::Var sum = ops::add(t, h, cover);
    return ops::conv2d(t, sum, P.at("embedder.blend.weight"), P.at("embedder.blend.bias"), 1);
}

Tape::Var extractor_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                            Tape::Var image) {
    check_image_input(t.value(image), cfg, "extractor");
    Tape::Var pooled = conv_trunk(t, cfg, P, image, "extractor");
    return ops::linear(t, pooled, P.at("extractor.head.weight"), P.at("extractor.head.bias"));
}

Tape::Var discriminator_forward(Tape& t, const ModelConfig& cfg, const TapeParams& P,
                                Tape::Var image) {
    check_image_input(t.value(image), cfg, "discriminator");
    Tape::Var pooled = conv_trunk(t, cfg, P, image, "discriminator");
    Tape::Var logit = ops::linear(t, pooled, P.at("discriminator.head.weight"),
                                  P.at("discriminator.head.bias"));
    return ops::sigmoid(t, logit);
}

LossVars total_loss_graph(Tape& t, const ModelConfig& cfg, Tape::Var cover, Tape::Var stego,
                          Tape::Var msg, Tape::Var msg_logits, Tape::Var p_stego) {
    LossVars lv;
    lv.l_i = ops::mse_loss(t, cover, stego);
    lv.l_m = ops::mse_loss(t, msg, ops::sigmoid(t, msg_logits));
    lv.l_g = ops::mean_all(t, ops::log1m_clamped(t, p_stego));
    lv.e = ops::combine_scalars(t, {lv.l_i, lv.l_m, lv.l_g},
                                {cfg.lambda_i, cfg.lambda_m, cfg.lambda_g});
    return lv;
}

LossValues total_loss(const ModelConfig& cfg, const Tensor& cover, const Tensor& stego,
                      const Tensor& msg, const Tensor& msg_logits, const Tensor& p_stego) {
    Tape t;
    LossVars lv = total_loss_graph(t, cfg, t.leaf(cover), t.leaf(stego), t.leaf(msg),
                                   t.leaf(msg_logits), t.leaf(p_stego));
    return {t.value(lv.e).data[0], t.value(lv.l_i).data[0], t.value(lv.l_m).data[0],
            t.value(lv.l_g).data[0]};
}

Tensor embed_batch(const ModelConfig& cfg, const ParamStore& ps, const Tensor& covers,
                   const Tensor& msgs, bool clamp01) {
    Tape t;
    TapeParams P = bind_params(t, ps);
    Tensor out = t.value(embedder_forward(t, cfg, P, t.leaf(covers), t.leaf(msgs)));
    if (clamp01)
        for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

Tensor extract_logits_batch(const ModelConfig& cfg, const ParamStore& ps, const Tensor& images) {
    Tape t;
    TapeParams P = bind_params(t, ps);
    return t.value(extractor_forward(t, cfg, P, t.leaf(images)));
}

std::vector<uint8_t> decode_bits(const Tensor& logits) {
    std::vector<uint8_t> bits(logits.data.size());
    for (size_t i = 0; i < logits.data.size(); ++i) bits[i] = logits.data[i] > 0.0f ? 1 : 0;
    return bits;
}

Complexity model_complexity(const ModelConfig& cfg) {
    Complexity c;
    for (const auto& [name, shape] : param_shapes(cfg)) c.params += Tensor::checked_numel(shape);

    // 2 * MACs for one embed forward on a single block; 9-tap kernels counted
    // at full support (padding edge effects ignored, as is conventional).
    const auto enc = encoder_channels(cfg);
    const auto dec = decoder_channels(cfg);
    int64_t macs = 0;
    int hw = cfg.block;
    for (int i = 0; i < cfg.k; ++i) {
        hw /= 2;
        macs += int64_t{9} * enc[i] * enc[i + 1] * hw * hw;
    }
    // transposed convs: every input position touches all 9 taps per filter pair
    for (int i = 0; i < cfg.k; ++i) {
        macs += int64_t{9} * dec[i] * dec[i + 1] * hw * hw;
        hw *= 2;
    }
    macs += int64_t{9} * 3 * 3 * cfg.block * cfg.block; // blend conv
    c.flops = 2 * macs;
    return c;
}

} // namespace stegnet
