#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stegnet/kernels.hpp"
#include "stegnet/models.hpp"
#include "stegnet/rng.hpp"

using namespace stegnet;
using Var = Tape::Var;

static const bool g_checks_on = (set_finite_checks(true), true);

static ModelConfig make_cfg(int B, int k, int m, uint64_t seed = 1) {
    ModelConfig cfg;
    cfg.block = B;
    cfg.k = k;
    cfg.msg_bits = m;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

static Tensor rand_cover(Rng& r, int b, int B) {
    Tensor t({b, 3, B, B});
    for (auto& v : t.data) v = r.uniform();
    return t;
}

static Tensor rand_msg(Rng& r, int b, int m) {
    Tensor t({b, m});
    for (auto& v : t.data) v = r.coin();
    return t;
}

TEST_CASE("config validation") {
    CHECK_NOTHROW(make_cfg(128, 4, 64));
    CHECK_NOTHROW(make_cfg(12, 2, 4)); // any multiple of 2^k works
    CHECK_THROWS_AS(make_cfg(10, 2, 4), ShapeError);
    CHECK_THROWS_AS(make_cfg(16, 0, 4), ShapeError);
    CHECK_THROWS_AS(make_cfg(16, 2, 0), ShapeError);
    CHECK_THROWS_AS(make_cfg(8, 4, 4), ShapeError); // 8 < 2^4
}

TEST_CASE("feature-capacity ratio arithmetic") {
    CHECK(feature_capacity(4, 64).rho == doctest::Approx(0.25));
    CHECK(feature_capacity(3, 16).rho == doctest::Approx(0.25));
    CHECK(feature_capacity(4, 128).rho == doctest::Approx(0.5));
    CHECK(feature_capacity(5, 128).rho == doctest::Approx(0.125));
    CHECK(feature_capacity(4, 64).f_c == 256);
    CHECK(feature_capacity(4, 64).m_c == 64);

    // scale consistency
    for (int k : {2, 3, 4})
        for (int m : {4, 8, 16}) {
            CHECK(feature_capacity(k, 4 * m).rho ==
                  doctest::Approx(4.0 * feature_capacity(k, m).rho));
            CHECK(feature_capacity(k + 1, m).rho ==
                  doctest::Approx(feature_capacity(k, m).rho / 4.0));
        }

    CHECK(bits_per_pixel(128, 64) == doctest::Approx(0.0013).epsilon(0.02));
    CHECK(bits_per_pixel(32, 16) == doctest::Approx(0.0052).epsilon(0.02));
    // displayed to 4 decimals these are exactly the published rates
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", bits_per_pixel(128, 64));
    CHECK(std::string(buf) == "0.0013");
    std::snprintf(buf, sizeof buf, "%.4f", bits_per_pixel(32, 16));
    CHECK(std::string(buf) == "0.0052");
}

TEST_CASE("channel schedules and bottleneck width") {
    ModelConfig cfg = make_cfg(128, 4, 64);
    CHECK(encoder_channels(cfg) == std::vector<int>{3, 32, 64, 128, 256});
    CHECK(decoder_channels(cfg) == std::vector<int>{320, 128, 64, 32, 3});
    CHECK(cfg.feature_channels() == 256);
    CHECK(cfg.latent_hw() == 8);

    ModelConfig c3 = make_cfg(32, 3, 16);
    CHECK(encoder_channels(c3) == std::vector<int>{3, 16, 32, 64});
    CHECK(decoder_channels(c3) == std::vector<int>{80, 32, 16, 3});

    // bottleneck = feature channels + message channels, for every config
    for (auto [B, k, m] : std::vector<std::array<int, 3>>{
             {16, 2, 4}, {32, 3, 16}, {64, 2, 128}, {64, 4, 16}, {128, 4, 64}}) {
        ModelConfig c = make_cfg(B, k, m);
        CHECK(decoder_channels(c)[0] == c.feature_channels() + m);
    }
}

TEST_CASE("parameter store determinism and init") {
    ModelConfig cfg = make_cfg(32, 3, 16);
    ParamStore a = init_params(cfg);
    ParamStore b = init_params(cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.items().size(); ++i) {
        CHECK(a.items()[i].first == b.items()[i].first);
        CHECK(a.items()[i].second.data == b.items()[i].second.data);
    }
    // different seed, different weights
    ModelConfig cfg2 = make_cfg(32, 3, 16, 2);
    ParamStore c = init_params(cfg2);
    CHECK(a.at("embedder.enc.0.weight").data != c.at("embedder.enc.0.weight").data);
    // biases start at zero
    for (float v : a.at("embedder.enc.0.bias").data) CHECK(v == 0.0f);
    CHECK(a.at("extractor.head.weight").shape == std::vector<int>{16, 64});
    CHECK(a.at("discriminator.head.weight").shape == std::vector<int>{1, 64});
    CHECK_THROWS_AS(a.at("nope"), Error);
}

TEST_CASE("embedder output shape equals cover shape") {
    Rng r(77);
    for (auto [B, k, m] : std::vector<std::array<int, 3>>{
             {16, 2, 4}, {32, 3, 16}, {64, 2, 128}, {64, 4, 16}, {128, 4, 64}}) {
        ModelConfig cfg = make_cfg(B, k, m);
        ParamStore ps = init_params(cfg);
        Tensor cover = rand_cover(r, 1, B);
        Tensor msg = rand_msg(r, 1, m);
        Tensor stego = embed_batch(cfg, ps, cover, msg, false);
        CHECK(stego.shape == cover.shape);
    }
}

TEST_CASE("embedder rejects wrong input shapes") {
    ModelConfig cfg = make_cfg(16, 2, 4);
    ParamStore ps = init_params(cfg);
    Rng r(5);
    CHECK_THROWS_AS(embed_batch(cfg, ps, rand_cover(r, 1, 32), rand_msg(r, 1, 4), false),
                    ShapeError);
    CHECK_THROWS_AS(embed_batch(cfg, ps, rand_cover(r, 1, 16), rand_msg(r, 1, 8), false),
                    ShapeError);
    CHECK_THROWS_AS(extract_logits_batch(cfg, ps, rand_cover(r, 1, 32)), ShapeError);
}

TEST_CASE("zeroed decoder reduces the embedder to the blend conv") {
    ModelConfig cfg = make_cfg(16, 2, 4);
    ParamStore ps = init_params(cfg);
    for (int i = 0; i < cfg.k; ++i) {
        for (auto& v : ps.at("embedder.dec." + std::to_string(i) + ".weight").data) v = 0.0f;
        for (auto& v : ps.at("embedder.dec." + std::to_string(i) + ".bias").data) v = 0.0f;
    }
    Rng r(9);
    Tensor cover = rand_cover(r, 2, 16);
    Tensor msg = rand_msg(r, 2, 4);
    Tensor stego = embed_batch(cfg, ps, cover, msg, false);

    Tensor want({2, 3, 16, 16});
    kernels::conv2d_forward(cover, ps.at("embedder.blend.weight"),
                            &ps.at("embedder.blend.bias"), 1, want);
    CHECK(stego.data == want.data);
}

TEST_CASE("extractor logits decode by the strict > 0.5 rule") {
    ModelConfig cfg = make_cfg(32, 3, 16);
    ParamStore ps = init_params(cfg);
    // zero head -> all logits 0 -> sigmoid exactly 0.5 -> decoded as 0
    for (auto& v : ps.at("extractor.head.weight").data) v = 0.0f;
    for (auto& v : ps.at("extractor.head.bias").data) v = 0.0f;
    Rng r(13);
    Tensor logits = extract_logits_batch(cfg, ps, rand_cover(r, 2, 32));
    CHECK(logits.shape == std::vector<int>{2, 16});
    for (float v : logits.data) CHECK(v == 0.0f);
    for (uint8_t b : decode_bits(logits)) CHECK(b == 0);
}

TEST_CASE("untrained extractor sits at chance level") {
    ModelConfig cfg = make_cfg(16, 2, 16, 21);
    ParamStore ps = init_params(cfg);
    Rng r(99);
    Tensor cover = rand_cover(r, 1, 16);

    int64_t errors = 0, total = 0;
    for (int batch = 0; batch < 8; ++batch) {
        const int b = 125;
        Tensor covers({b, 3, 16, 16});
        for (int i = 0; i < b; ++i)
            std::copy(cover.data.begin(), cover.data.end(),
                      covers.data.begin() + static_cast<int64_t>(i) * cover.numel());
        Tensor msgs = rand_msg(r, b, 16);
        Tensor stego = embed_batch(cfg, ps, covers, msgs);
        std::vector<uint8_t> bits = decode_bits(extract_logits_batch(cfg, ps, stego));
        for (size_t i = 0; i < bits.size(); ++i) {
            errors += bits[i] != static_cast<uint8_t>(msgs.data[i]);
            ++total;
        }
    }
    const double ber = static_cast<double>(errors) / static_cast<double>(total);
    CHECK(ber > 0.4);
    CHECK(ber < 0.6);
}

TEST_CASE("discriminator output is a probability and deterministic") {
    ModelConfig cfg = make_cfg(16, 2, 4);
    ParamStore ps = init_params(cfg);
    Rng r(31);
    Tensor one = rand_cover(r, 1, 16);
    Tensor two({2, 3, 16, 16});
    std::copy(one.data.begin(), one.data.end(), two.data.begin());
    std::copy(one.data.begin(), one.data.end(), two.data.begin() + one.numel());

    Tape t;
    TapeParams P = bind_params(t, ps);
    Var p = discriminator_forward(t, cfg, P, t.leaf(two));
    const Tensor& pv = t.value(p);
    CHECK(pv.shape == std::vector<int>{2, 1});
    for (float v : pv.data) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    CHECK(pv.data[0] == pv.data[1]);
}

TEST_CASE("discriminator parameter count matches the layer-sum formula") {
    ModelConfig cfg = make_cfg(128, 4, 64);
    ParamStore ps = init_params(cfg);
    int64_t disc = 0;
    for (const auto& [name, t] : ps.items())
        if (name.rfind("discriminator.", 0) == 0) disc += t.numel();
    // sum over conv layers (ci*co*9 + co) plus the 256->1 head
    const int64_t want = (3 * 32 * 9 + 32) + (32 * 64 * 9 + 64) + (64 * 128 * 9 + 128) +
                         (128 * 256 * 9 + 256) + (256 * 1 + 1);
    CHECK(disc == want);
    CHECK(disc == 388673);
}

TEST_CASE("model complexity against independently hand-summed tables") {
    // B=32, k=3, |M|=16
    {
        Complexity c = model_complexity(make_cfg(32, 3, 16));
        const int64_t embedder = (3 * 16 * 9 + 16) + (16 * 32 * 9 + 32) + (32 * 64 * 9 + 64) +
                                 (80 * 32 * 9 + 32) + (32 * 16 * 9 + 16) + (16 * 3 * 9 + 3) +
                                 (3 * 3 * 9 + 3);
        const int64_t extractor = (3 * 16 * 9 + 16) + (16 * 32 * 9 + 32) + (32 * 64 * 9 + 64) +
                                  (64 * 16 + 16);
        const int64_t discrim = (3 * 16 * 9 + 16) + (16 * 32 * 9 + 32) + (32 * 64 * 9 + 64) +
                                (64 * 1 + 1);
        CHECK(c.params == embedder + extractor + discrim);
        CHECK(c.params == 100072);

        const int64_t macs = 9 * 3 * 16 * 256 + 9 * 16 * 32 * 64 + 9 * 32 * 64 * 16 // encoder
                             + 9 * 80 * 32 * 16 + 9 * 32 * 16 * 64 + 9 * 16 * 3 * 256 // decoder
                             + 9 * 3 * 3 * 1024;                                      // blend
        CHECK(c.flops == 2 * macs);
        CHECK(c.flops == 3115008);
    }
    // B=128, k=4, |M|=64: the flagship configuration
    {
        Complexity c = model_complexity(make_cfg(128, 4, 64));
        CHECK(c.params == 1643928);
        CHECK(c.flops == 252739584);
        // the embedder+extractor pair alone (the inference-time networks)
        ParamStore ps = init_params(make_cfg(128, 4, 64));
        int64_t inference = 0;
        for (const auto& [name, t] : ps.items())
            if (name.rfind("discriminator.", 0) != 0) inference += t.numel();
        CHECK(inference == 1255255); // 1.2553M
    }
    // a linear layer contributes m*n+m
    {
        ModelConfig cfg = make_cfg(16, 2, 7);
        ParamStore ps = init_params(cfg);
        CHECK(ps.at("extractor.head.weight").numel() + ps.at("extractor.head.bias").numel() ==
              16 * 7 + 7);
    }
}

TEST_CASE("total loss plug-in values") {
    ModelConfig cfg = make_cfg(16, 2, 4);
    Rng r(41);
    Tensor c = rand_cover(r, 1, 16);
    Tensor msg({1, 4}, {1.0f, 0.0f, 1.0f, 1.0f});
    // logits at +-40 saturate sigmoid to exactly {1, 0} in f32
    Tensor logits({1, 4}, {40.0f, -40.0f, 40.0f, 40.0f});
    Tensor p_stego({1, 1}, {0.5f});

    LossValues lv = total_loss(cfg, c, c, msg, logits, p_stego);
    CHECK(lv.l_i == 0.0);
    CHECK(lv.l_m < 1e-30);
    CHECK(lv.l_g == doctest::Approx(std::log(0.5)).epsilon(1e-6));
    CHECK(lv.e == doctest::Approx(0.001 * std::log(0.5)).epsilon(1e-4));

    // lambda_g = 0 leaves a pure autoencoding + message objective
    ModelConfig cfg0 = cfg;
    cfg0.lambda_g = 0.0f;
    Tensor stego = rand_cover(r, 1, 16);
    Tensor logits2({1, 4}, {0.3f, -0.2f, 0.1f, 0.5f});
    LossValues a = total_loss(cfg0, c, stego, msg, logits2, p_stego);
    CHECK(a.e == doctest::Approx(1.0 * a.l_i + 1.5 * a.l_m).epsilon(1e-6));
}

TEST_CASE("total loss is permutation-equivariant over the batch") {
    ModelConfig cfg = make_cfg(16, 2, 4);
    Rng r(55);
    const int b = 3;
    Tensor cover = rand_cover(r, b, 16), stego = rand_cover(r, b, 16);
    Tensor msg = rand_msg(r, b, 4);
    Tensor logits({b, 4});
    for (auto& v : logits.data) v = 2.0f * r.uniform() - 1.0f;
    Tensor p({b, 1});
    for (auto& v : p.data) v = 0.1f + 0.8f * r.uniform();

    auto permute = [b](const Tensor& t) {
        Tensor out = t;
        const int64_t row = t.numel() / b;
        for (int i = 0; i < b; ++i)
            std::copy(t.data.begin() + i * row, t.data.begin() + (i + 1) * row,
                      out.data.begin() + (b - 1 - i) * row);
        return out;
    };
    LossValues l1 = total_loss(cfg, cover, stego, msg, logits, p);
    LossValues l2 = total_loss(cfg, permute(cover), permute(stego), permute(msg),
                               permute(logits), permute(p));
    CHECK(l1.e == doctest::Approx(l2.e).epsilon(1e-10));
    CHECK(l1.l_i == doctest::Approx(l2.l_i).epsilon(1e-10));
    CHECK(l1.l_m == doctest::Approx(l2.l_m).epsilon(1e-10));
    CHECK(l1.l_g == doctest::Approx(l2.l_g).epsilon(1e-10));
}

TEST_CASE("end-to-end objective gradient survives finite differences") {
    ModelConfig cfg = make_cfg(8, 2, 4, 3);
    ParamStore ps = init_params(cfg);
    Rng r(61);
    Tensor cover = rand_cover(r, 1, 8);
    Tensor msg = rand_msg(r, 1, 4);

    // check a spread of parameter tensors plus both data inputs; the full
    // sweep over every parameter runs in the acceptance suite
    const std::vector<std::string> picked = {
        "embedder.enc.0.weight", "embedder.dec.1.weight", "embedder.dec.1.bias",
        "embedder.blend.weight", "extractor.head.weight", "discriminator.head.weight"};

    std::vector<Tensor> inputs = {cover, msg};
    for (const auto& name : picked) inputs.push_back(ps.at(name));

    auto f = [&](Tape& t, const std::vector<Var>& vs) {
        TapeParams P;
        for (const auto& [name, tensor] : ps.items()) {
            auto it = std::find(picked.begin(), picked.end(), name);
            if (it != picked.end())
                P.ordered.emplace_back(name, vs[2 + (it - picked.begin())]);
            else
                P.ordered.emplace_back(name, t.leaf(tensor));
        }
        Var c = vs[0], m = vs[1];
        Var stego = embedder_forward(t, cfg, P, c, m);
        Var logits = extractor_forward(t, cfg, P, stego);
        Var p_stego = discriminator_forward(t, cfg, P, stego);
        return total_loss_graph(t, cfg, c, stego, m, logits, p_stego).e;
    };
    FdReport rep = finite_diff_check(f, inputs);
    CHECK(rep.max_rel_err < 1e-3f);
}
