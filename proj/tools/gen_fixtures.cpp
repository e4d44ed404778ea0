// Writes the committed regression fixtures: a small trained-for-a-moment
// checkpoint, a cover image, and the stego image that exact checkpoint +
// cover + payload + seed must keep reproducing byte-for-byte. Run from the
// repository root:  build/gen_fixtures tests/fixtures
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "stegnet/adam.hpp"
#include "stegnet/codec.hpp"
#include "stegnet/rng.hpp"
#include "stegnet/trainer.hpp"

using namespace stegnet;

namespace {

// Same texture generator as the tests use (kept in sync by the regression
// test, which regenerates nothing: it only reads the committed files).
Image8 synth_image(Rng& rng, int w, int h) {
    Image8 img(w, h);
    constexpr double kTau = 6.283185307179586;
    for (int c = 0; c < 3; ++c) {
        double base = 0.25 + 0.5 * rng.uniform_f64();
        struct Wave {
            double amp, fx, fy, phase;
        } waves[3];
        for (Wave& wv : waves) {
            wv.amp = 0.05 + 0.13 * rng.uniform_f64();
            wv.fx = (rng.uniform_f64() * 4.0 - 2.0);
            wv.fy = (rng.uniform_f64() * 4.0 - 2.0);
            wv.phase = rng.uniform_f64() * kTau;
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = base;
                for (const Wave& wv : waves)
                    v += wv.amp * std::cos(kTau * (wv.fx * x / w + wv.fy * y / h) + wv.phase);
                v += 0.02 * (rng.uniform_f64() - 0.5);
                v = std::min(0.98, std::max(0.02, v));
                img.px(x, y)[c] = uint8_t(v * 255.0 + 0.5);
            }
    }
    return img;
}

} // namespace

int main(int argc, char** argv) {
    std::string out_dir = argc > 1 ? argv[1] : "tests/fixtures";
    std::filesystem::create_directories(out_dir);
    auto path = [&out_dir](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    // A small model, nudged away from initialization by a few optimizer
    // steps on synthetic batches so the fixture exercises non-trivial
    // weights rather than pure Kaiming noise.
    ModelConfig cfg;
    cfg.block = 32;
    cfg.k = 3;
    cfg.msg_bits = 16;
    cfg.seed = 20260816;

    Checkpoint ck = make_checkpoint(cfg);
    AdamConfig ac{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
    AdamState gen{ac, 0, {}}, disc{ac, 0, {}};
    Rng rng(99);
    for (int step = 0; step < 12; ++step) {
        Batch b{Tensor({4, 3, cfg.block, cfg.block}), Tensor({4, cfg.msg_bits})};
        for (int i = 0; i < 4; ++i) {
            Image8 img = synth_image(rng, cfg.block, cfg.block);
            Tensor t = image_to_tensor(img);
            std::copy(t.data.begin(), t.data.end(),
                      b.covers.data.begin() + size_t(i) * t.data.size());
        }
        for (auto& v : b.msgs.data) v = rng.coin() ? 1.0f : 0.0f;
        train_step(cfg, ck.params, gen, disc, b);
        ck.step = step + 1;
    }
    save_checkpoint(ck, path("small.ckpt"));

    Rng cover_rng(4242);
    Image8 cover = synth_image(cover_rng, 140, 70); // padding + interior/edge blocks
    write_png(cover, path("cover.png"));

    std::vector<uint8_t> payload = {'f', 'i', 'x', 'e', 'd'};
    Image8 stego = embed_message(ck, cover, payload, 7);
    write_png(stego, path("stego.png"));

    std::printf("wrote %s, %s, %s\n", path("small.ckpt").c_str(), path("cover.png").c_str(),
                path("stego.png").c_str());
    return 0;
}
