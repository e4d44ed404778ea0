#include "stegnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stegnet/common.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/rng.hpp"
#include "stegnet/tape.hpp"

namespace stegnet {
namespace {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void copy_crop(const Image8& img, int x0, int y0, int block, float* dst /* [3,B,B] */) {
    size_t plane = size_t(block) * block;
    for (int y = 0; y < block; ++y) {
        const uint8_t* src = img.px(x0, y0 + y);
        for (int x = 0; x < block; ++x)
            for (int c = 0; c < 3; ++c)
                dst[c * plane + size_t(y) * block + x] = float(src[x * 3 + c]) / 255.0f;
    }
}

Image8 center_crop(const Image8& img, int block) {
    int x0 = (img.w - block) / 2, y0 = (img.h - block) / 2;
    Image8 out(block, block);
    for (int y = 0; y < block; ++y)
        std::copy_n(img.px(x0, y0 + y), size_t(block) * 3, out.px(0, y));
    return out;
}

void require_finite(double v, const char* term, const char* phase) {
    if (!std::isfinite(v))
        throw TrainingError(std::string("non-finite ") + term + " during " + phase +
                            " (diverged or bad input)");
}

std::vector<ParamGrad> grads_for_prefixes(ParamStore& ps, Tape& t, const TapeParams& P,
                                          std::initializer_list<const char*> prefixes) {
    std::vector<ParamGrad> out;
    for (auto& [name, tensor] : ps.items()) {
        bool hit = false;
        for (const char* p : prefixes)
            if (name.rfind(p, 0) == 0) { hit = true; break; }
        if (!hit) continue;
        out.push_back(ParamGrad{name, &tensor, &t.grad(P.at(name))});
    }
    return out;
}

} // namespace

Dataset Dataset::load_dir(const std::string& dir, int block) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);

    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());

    Dataset ds;
    for (const std::string& name : names) {
        Image8 img;
        try {
            img = read_image((fs::path(dir) / name).string());
        } catch (const DataError&) {
            ++ds.skipped_;
            continue;
        }
        if (img.w < block || img.h < block) {
            ++ds.skipped_;
            continue;
        }
        if (fnv1a64(name) % 10 == 0) ds.val_.push_back(std::move(img));
        else ds.train_.push_back(std::move(img));
    }
    if (ds.train_.empty())
        throw DataError("no usable training images in " + dir + " (need at least " +
                        std::to_string(block) + "x" + std::to_string(block) + " pixels)");
    if (ds.val_.empty()) {
        // Tiny datasets can hash everything into the training split; keep
        // validation non-empty by moving the last image over.
        ds.val_.push_back(std::move(ds.train_.back()));
        ds.train_.pop_back();
        if (ds.train_.empty())
            throw DataError("dataset in " + dir + " is too small to split off validation images");
    }
    return ds;
}

Batch sample_batch(const std::vector<Image8>& images, const ModelConfig& cfg,
                   int batch_size, uint64_t seed, int epoch, int step) {
    int n = int(images.size());
    if (batch_size < 1) throw ShapeError("sample_batch: batch size must be positive");
    if (n < batch_size)
        throw DataError("dataset smaller than one batch: " + std::to_string(n) + " images, batch " +
                        std::to_string(batch_size));
    int steps_per_epoch = n / batch_size;
    if (step < 0 || step >= steps_per_epoch)
        throw Error("sample_batch: step " + std::to_string(step) + " out of range (epoch has " +
                    std::to_string(steps_per_epoch) + " steps)");

    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[size_t(i)] = i;
    Rng(mix_seed(seed, 0xE70C, uint64_t(epoch))).shuffle(perm);

    int B = cfg.block;
    Batch b{Tensor({batch_size, 3, B, B}), Tensor({batch_size, cfg.msg_bits})};
    size_t item = size_t(3) * B * B;
    for (int s = 0; s < batch_size; ++s) {
        const Image8& img = images[size_t(perm[size_t(step) * batch_size + s])];
        if (img.w < B || img.h < B)
            throw DataError("sample_batch: image smaller than the model block");
        Rng crop(mix_seed(seed, 0xC209, (uint64_t(epoch) << 20) | uint64_t(step), uint64_t(s)));
        int x0 = int(crop.below(uint64_t(img.w - B + 1)));
        int y0 = int(crop.below(uint64_t(img.h - B + 1)));
        copy_crop(img, x0, y0, B, b.covers.data.data() + size_t(s) * item);
    }
    Rng msg(mix_seed(seed, 0xB175, uint64_t(epoch), uint64_t(step)));
    for (auto& v : b.msgs.data) v = msg.coin() ? 1.0f : 0.0f;
    return b;
}

StepMetrics train_step(const ModelConfig& cfg, ParamStore& ps, AdamState& gen_state,
                       AdamState& disc_state, const Batch& batch) {
    StepMetrics m{};

    // Phase 1: discriminator on real covers vs detached stego.
    Tensor stego_detached;
    {
        Tape t;
        TapeParams P = bind_params(t, ps);
        stego_detached =
            t.value(embedder_forward(t, cfg, P, t.leaf(batch.covers), t.leaf(batch.msgs)));
    }
    {
        Tape t;
        TapeParams P = bind_params(t, ps);
        Tape::Var p_cover = discriminator_forward(t, cfg, P, t.leaf(batch.covers));
        Tape::Var p_stego = discriminator_forward(t, cfg, P, t.leaf(stego_detached));
        auto [l_d, l_g_unused] = ops::adversarial_losses(t, p_cover, p_stego);
        (void)l_g_unused;
        m.l_d = t.value(l_d).data[0];
        require_finite(m.l_d, "discriminator loss", "phase 1");
        t.backward(l_d);
        adam_step(grads_for_prefixes(ps, t, P, {"discriminator."}), disc_state);
    }

    // Phase 2: joint embedder+extractor step against the updated critic.
    {
        Tape t;
        TapeParams P = bind_params(t, ps);
        Tape::Var cover = t.leaf(batch.covers);
        Tape::Var msg = t.leaf(batch.msgs);
        Tape::Var stego = embedder_forward(t, cfg, P, cover, msg);
        Tape::Var logits = extractor_forward(t, cfg, P, stego);
        Tape::Var p_stego = discriminator_forward(t, cfg, P, stego);
        LossVars lv = total_loss_graph(t, cfg, cover, stego, msg, logits, p_stego);
        m.e = t.value(lv.e).data[0];
        m.l_i = t.value(lv.l_i).data[0];
        m.l_m = t.value(lv.l_m).data[0];
        m.l_g = t.value(lv.l_g).data[0];
        require_finite(m.e, "objective E", "phase 2");
        t.backward(lv.e);
        adam_step(grads_for_prefixes(ps, t, P, {"embedder.", "extractor."}), gen_state);

        const Tensor& lg = t.value(logits);
        size_t bad = 0;
        for (size_t i = 0; i < lg.data.size(); ++i)
            if ((lg.data[i] > 0.0f) != (batch.msgs.data[i] > 0.5f)) ++bad;
        m.ber = double(bad) / double(lg.data.size());
    }
    return m;
}

EvalMetrics evaluate(const ModelConfig& cfg, const ParamStore& ps,
                     const std::vector<Image8>& images, uint64_t seed) {
    EvalMetrics em;
    if (images.empty()) throw DataError("evaluate: no images");
    int B = cfg.block;
    size_t item = size_t(3) * B * B;
    const int chunk = 32;
    double ber_sum = 0, berq_sum = 0, psnr_sum = 0, mae_sum = 0;

    for (size_t i0 = 0; i0 < images.size(); i0 += chunk) {
        size_t i1 = std::min(images.size(), i0 + chunk);
        int n = int(i1 - i0);
        std::vector<Image8> crops(static_cast<size_t>(n));
        Tensor covers({n, 3, B, B}), msgs({n, cfg.msg_bits});
        for (int i = 0; i < n; ++i) {
            crops[size_t(i)] = center_crop(images[i0 + i], B);
            copy_crop(crops[size_t(i)], 0, 0, B, covers.data.data() + size_t(i) * item);
            Rng mr(mix_seed(seed, 0x5EED, uint64_t(i0 + i)));
            for (int j = 0; j < cfg.msg_bits; ++j)
                msgs.data[size_t(i) * cfg.msg_bits + j] = mr.coin() ? 1.0f : 0.0f;
        }

        Tensor stego = embed_batch(cfg, ps, covers, msgs, true);
        Tensor logits = extract_logits_batch(cfg, ps, stego);

        Tensor stego_q(stego.shape);
        for (size_t i = 0; i < stego.data.size(); ++i)
            stego_q.data[i] = float(quantize01(stego.data[i])) / 255.0f;
        Tensor logits_q = extract_logits_batch(cfg, ps, stego_q);

        for (int i = 0; i < n; ++i) {
            size_t mbase = size_t(i) * cfg.msg_bits;
            int bad = 0, badq = 0;
            for (int j = 0; j < cfg.msg_bits; ++j) {
                bool want = msgs.data[mbase + j] > 0.5f;
                if ((logits.data[mbase + j] > 0.0f) != want) ++bad;
                if ((logits_q.data[mbase + j] > 0.0f) != want) ++badq;
            }
            ber_sum += double(bad) / cfg.msg_bits;
            berq_sum += double(badq) / cfg.msg_bits;
            Image8 stego_img = tensor_to_image(stego, i);
            psnr_sum += psnr_u8(crops[size_t(i)], stego_img);
            mae_sum += mae_u8(crops[size_t(i)], stego_img);
        }
    }
    em.images = int(images.size());
    em.ber = ber_sum / em.images;
    em.ber_q = berq_sum / em.images;
    em.psnr_db = psnr_sum / em.images;
    em.mae = mae_sum / em.images;
    return em;
}

TrainResult train(const TrainRun& run) {
    ModelConfig cfg = run.cfg;
    cfg.validate();
    if (run.epochs < 0) throw Error("train: negative epoch count");

    Dataset ds = Dataset::load_dir(run.data_dir, cfg.block);
    if (int(ds.train().size()) < run.batch_size)
        throw DataError("dataset smaller than one batch: " + std::to_string(ds.train().size()) +
                        " training images, batch " + std::to_string(run.batch_size));
    int steps_per_epoch = int(ds.train().size()) / run.batch_size;

    ParamStore ps = init_params(cfg);
    AdamConfig ac{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
    AdamState gen_state{ac, 0, {}}, disc_state{ac, 0, {}};

    TrainResult res;
    bool have_best = false;
    double best_ber = 0.0, best_psnr = 0.0;
    int64_t gstep = 0;

    std::ofstream csv;
    if (!run.log_csv.empty()) {
        csv.open(run.log_csv, std::ios::trunc);
        if (!csv) throw DataError("cannot open log file: " + run.log_csv);
        csv << "epoch,E,L_I,L_M,L_G,val_BER,val_PSNR\n";
    }

    for (int epoch = 0; epoch < run.epochs; ++epoch) {
        double se = 0, si = 0, sm = 0, sg = 0;
        int count = 0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            if (run.max_steps > 0 && gstep >= run.max_steps) break;
            Batch batch = sample_batch(ds.train(), cfg, run.batch_size, cfg.seed, epoch, step);
            StepMetrics smet;
            try {
                smet = train_step(cfg, ps, gen_state, disc_state, batch);
            } catch (const TrainingError& e) {
                throw TrainingError("step " + std::to_string(gstep) + ": " + e.what());
            }
            se += smet.e; si += smet.l_i; sm += smet.l_m; sg += smet.l_g;
            ++count;
            ++gstep;
        }
        if (count == 0) break; // step budget exhausted before this epoch

        EvalMetrics em = evaluate(cfg, ps, ds.val(), cfg.seed);
        EpochRow row{epoch, se / count, si / count, sm / count, sg / count, em.ber, em.psnr_db};
        res.history.push_back(row);
        if (csv.is_open()) {
            char line[256];
            std::snprintf(line, sizeof line, "%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", row.epoch, row.e,
                          row.l_i, row.l_m, row.l_g, row.val_ber, row.val_psnr);
            csv << line;
            csv.flush();
        }
        if (run.verbose)
            std::fprintf(stderr, "epoch %3d  E=%.5f  L_I=%.5f  L_M=%.5f  L_G=%.5f  val_BER=%.4f  val_PSNR=%.2f\n",
                         row.epoch, row.e, row.l_i, row.l_m, row.l_g, row.val_ber, row.val_psnr);

        bool improved = !have_best || em.ber < best_ber ||
                        (em.ber == best_ber && em.psnr_db > best_psnr);
        if (improved) {
            have_best = true;
            best_ber = em.ber;
            best_psnr = em.psnr_db;
            res.best.cfg = cfg;
            res.best.params = ps;
            res.best.step = gstep;
            res.best.best_val_ber = float(em.ber);
            res.best.best_val_psnr = float(em.psnr_db);
            if (!run.out_best.empty()) save_checkpoint(res.best, run.out_best);
        }
        if (run.max_steps > 0 && gstep >= run.max_steps) break;
    }

    res.last.cfg = cfg;
    res.last.params = ps;
    res.last.step = gstep;
    res.last.best_val_ber = have_best ? float(best_ber) : -1.0f;
    res.last.best_val_psnr = have_best ? float(best_psnr) : -1.0f;
    if (!have_best) {
        res.best = res.last; // e.g. epochs == 0
        if (!run.out_best.empty()) save_checkpoint(res.best, run.out_best);
    }
    if (!run.out_final.empty()) save_checkpoint(res.last, run.out_final);
    res.steps_run = gstep;
    return res;
}

} // namespace stegnet
