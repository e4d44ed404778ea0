#include "stegnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "json.hpp"
#include "stegnet/codec.hpp"
#include "stegnet/common.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/rng.hpp"
#include "stegnet/trainer.hpp"

namespace stegnet {
namespace {

using ordered_json = nlohmann::ordered_json;

double json_safe(double v) { return std::isfinite(v) ? v : 1e9; }

std::vector<std::string> list_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

double interior_ber(const BlockLayout& L, const std::vector<std::vector<uint8_t>>& want,
                    const std::vector<std::vector<uint8_t>>& got) {
    int64_t bad = 0, total = 0;
    for (int bi = 0; bi < L.block_count(); ++bi) {
        if (!L.interior[size_t(bi)]) continue;
        for (size_t j = 0; j < want[size_t(bi)].size(); ++j) {
            bad += (want[size_t(bi)][j] != 0) != (got[size_t(bi)][j] != 0);
            ++total;
        }
    }
    return total ? double(bad) / double(total) : 0.0;
}

} // namespace

BenchReport bench(const Checkpoint& ck, const std::string& data_dir, int repeats,
                  uint64_t seed, const std::string& diff_dir, bool verbose) {
    namespace fs = std::filesystem;
    if (repeats < 1) throw Error("bench: repeats must be positive");
    const ModelConfig& cfg = ck.cfg;

    BenchReport rep;
    rep.dataset = data_dir;
    rep.cfg = cfg;
    rep.repeats = repeats;
    rep.bpp = bits_per_pixel(cfg.block, cfg.msg_bits);
    Complexity cx = model_complexity(cfg);
    rep.params = cx.params;
    rep.flops = cx.flops;

    if (!diff_dir.empty()) fs::create_directories(diff_dir);

    std::vector<std::string> names = list_images(data_dir);
    uint64_t img_idx = 0;
    for (const std::string& name : names) {
        Image8 cover;
        try {
            cover = read_image((fs::path(data_dir) / name).string());
        } catch (const DataError&) {
            ++rep.skipped;
            continue;
        }
        BlockLayout L = plan_blocks(cover.w, cover.h, cfg.block);
        if (L.interior_count == 0) {
            ++rep.skipped; // too small to carry even one block's bits
            continue;
        }

        BenchRow row;
        row.image = name;
        row.width = cover.w;
        row.height = cover.h;
        row.blocks = L.block_count();

        for (int r = 0; r < repeats; ++r) {
            std::vector<std::vector<uint8_t>> bits(size_t(L.block_count()));
            for (int bi = 0; bi < L.block_count(); ++bi) {
                Rng rng(mix_seed(seed, img_idx, uint64_t(r), uint64_t(bi)));
                bits[size_t(bi)].resize(cfg.msg_bits);
                for (int j = 0; j < cfg.msg_bits; ++j) bits[size_t(bi)][j] = uint8_t(rng.coin());
            }

            auto t0 = std::chrono::steady_clock::now();
            BlockEmbed be = embed_blocks(ck, cover, bits);
            auto t1 = std::chrono::steady_clock::now();
            row.embed_seconds += std::chrono::duration<double>(t1 - t0).count();

            row.ber += interior_ber(L, bits, extract_block_bits(ck, be.stego_blocks));
            row.ber_quantized += interior_ber(L, bits, extract_blocks(ck, be.stego));

            if (r == 0) {
                row.psnr_db = psnr_u8(cover, be.stego);
                row.ssim = ssim_u8(cover, be.stego);
                row.mae = mae_u8(cover, be.stego);
                if (!diff_dir.empty()) {
                    fs::path out = fs::path(diff_dir) / (fs::path(name).stem().string() + ".diff.png");
                    write_png(diff_image(cover, be.stego, 15), out.string());
                }
            }
        }
        row.ber /= repeats;
        row.ber_quantized /= repeats;
        row.embed_seconds /= repeats;
        if (verbose)
            std::fprintf(stderr, "%-24s %4dx%-4d BER=%.4f BERq=%.4f PSNR=%.2f SSIM=%.4f\n",
                         name.c_str(), cover.w, cover.h, row.ber, row.ber_quantized, row.psnr_db,
                         row.ssim);
        rep.rows.push_back(std::move(row));
        ++img_idx;
    }

    if (rep.rows.empty()) throw DataError("bench: no usable images in " + data_dir);
    rep.images = int(rep.rows.size());
    for (const BenchRow& r : rep.rows) {
        rep.ber += r.ber;
        rep.ber_quantized += r.ber_quantized;
        rep.psnr_db += r.psnr_db;
        rep.ssim += r.ssim;
        rep.mae += r.mae;
        rep.embed_seconds += r.embed_seconds;
    }
    rep.ber /= rep.images;
    rep.ber_quantized /= rep.images;
    rep.psnr_db /= rep.images;
    rep.ssim /= rep.images;
    rep.mae /= rep.images;
    rep.embed_seconds /= rep.images;
    return rep;
}

std::string report_json(const BenchReport& r) {
    ordered_json j;
    j["dataset"] = r.dataset;
    j["block"] = r.cfg.block;
    j["k"] = r.cfg.k;
    j["msg_bits"] = r.cfg.msg_bits;
    j["repeats"] = r.repeats;
    j["images"] = r.images;
    j["skipped"] = r.skipped;
    j["ber"] = r.ber;
    j["ber_quantized"] = r.ber_quantized;
    j["psnr_db"] = json_safe(r.psnr_db);
    j["ssim"] = r.ssim;
    j["mae"] = r.mae;
    j["bpp"] = r.bpp;
    j["params"] = r.params;
    j["flops"] = r.flops;
    j["embed_seconds"] = r.embed_seconds;
    j["per_image"] = ordered_json::array();
    for (const BenchRow& row : r.rows) {
        ordered_json ji;
        ji["image"] = row.image;
        ji["width"] = row.width;
        ji["height"] = row.height;
        ji["blocks"] = row.blocks;
        ji["ber"] = row.ber;
        ji["ber_quantized"] = row.ber_quantized;
        ji["psnr_db"] = json_safe(row.psnr_db);
        ji["ssim"] = row.ssim;
        ji["mae"] = row.mae;
        ji["embed_seconds"] = row.embed_seconds;
        j["per_image"].push_back(std::move(ji));
    }
    return j.dump(2) + "\n";
}

std::string report_text(const BenchReport& r) {
    char buf[512];
    std::string s;
    std::snprintf(buf, sizeof buf, "model: block=%d k=%d msg_bits=%d   dataset: %s\n", r.cfg.block,
                  r.cfg.k, r.cfg.msg_bits, r.dataset.c_str());
    s += buf;
    std::snprintf(buf, sizeof buf, "images: %d (skipped %d)   repeats: %d\n\n", r.images, r.skipped,
                  r.repeats);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.6f\n", "BER", r.ber);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.6f\n", "BER (quantized)", r.ber_quantized);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.3f dB\n", "PSNR", r.psnr_db);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.5f\n", "SSIM", r.ssim);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.4f\n", "MAE (8-bit)", r.mae);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.4f\n", "bits/pixel", r.bpp);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12lld (%.4fM)\n", "parameters", (long long)r.params,
                  double(r.params) / 1e6);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12lld (%.4f GFLOPs/block embed)\n", "FLOPs",
                  (long long)r.flops, double(r.flops) / 1e9);
    s += buf;
    std::snprintf(buf, sizeof buf, "  %-18s %12.4f s\n", "embed time", r.embed_seconds);
    s += buf;
    if (r.cfg.block == 128 && r.cfg.k == 4 && r.cfg.msg_bits == 64) {
        Complexity cx = model_complexity(r.cfg);
        int64_t infer_pair = 0;
        for (const auto& [name, shape] : param_shapes(r.cfg))
            if (name.rfind("discriminator.", 0) != 0) infer_pair += Tensor::checked_numel(shape);
        (void)cx;
        std::snprintf(buf, sizeof buf,
                      "\nreference for this config: published 1.2553M params / 0.3834 GFLOPs; this "
                      "build: %.4fM embed+extract params\n",
                      double(infer_pair) / 1e6);
        s += buf;
    }
    return s;
}

std::vector<std::array<int, 3>> parse_sweep_spec(const std::string& s) {
    std::vector<std::array<int, 3>> out;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t end = s.find(';', pos);
        std::string triple = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        // trim spaces
        size_t a = triple.find_first_not_of(" \t");
        size_t b = triple.find_last_not_of(" \t");
        triple = a == std::string::npos ? "" : triple.substr(a, b - a + 1);
        if (!triple.empty()) {
            int B = 0, k = 0, M = 0;
            char extra = 0;
            if (std::sscanf(triple.c_str(), "%d ,%d ,%d %c", &B, &k, &M, &extra) != 3)
                throw Error("malformed sweep spec triple '" + triple + "' (expected B,k,M)");
            ModelConfig probe;
            probe.block = B;
            probe.k = k;
            probe.msg_bits = M;
            try {
                probe.validate();
            } catch (const Error& e) {
                throw Error("invalid sweep spec triple '" + triple + "': " + e.what());
            }
            out.push_back({B, k, M});
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    if (out.empty()) throw Error("empty sweep spec");
    return out;
}

SweepResult sweep(const SweepSpec& spec, const std::string& data_dir) {
    if (spec.seeds.empty()) throw Error("sweep: need at least one seed");
    if (spec.budget_steps < 1) throw Error("sweep: step budget must be positive");

    SweepResult res;
    for (const auto& [B, k, M] : spec.tuples) {
        for (uint64_t seed : spec.seeds) {
            SweepRow row;
            row.block = B;
            row.k = k;
            row.msg_bits = M;
            row.seed = seed;
            FeatureCapacity fc = feature_capacity(k, M);
            row.rho = fc.rho;
            row.bpp = bits_per_pixel(B, M);
            try {
                TrainRun run;
                run.cfg.block = B;
                run.cfg.k = k;
                run.cfg.msg_bits = M;
                run.cfg.seed = seed;
                run.data_dir = data_dir;
                run.batch_size = spec.batch_size;
                run.max_steps = spec.budget_steps;
                run.epochs = int(std::min<int64_t>(spec.budget_steps, 1 << 20)); // >= ceil(budget/steps_per_epoch)
                run.verbose = false;
                if (spec.verbose)
                    std::fprintf(stderr, "sweep: training block=%d k=%d msg_bits=%d seed=%llu (%lld steps)\n",
                                 B, k, M, (unsigned long long)seed, (long long)spec.budget_steps);
                TrainResult tr = train(run);
                Dataset ds = Dataset::load_dir(data_dir, B);
                EvalMetrics em = evaluate(tr.best.cfg, tr.best.params, ds.val(), seed);
                row.ber = em.ber;
                row.ber_quantized = em.ber_q;
                row.psnr_db = em.psnr_db;
                row.mae = em.mae;
                row.steps = tr.steps_run;
                row.ok = true;
            } catch (const Error& e) {
                row.ok = false;
                row.error = e.what();
            }
            if (spec.verbose && row.ok)
                std::fprintf(stderr, "sweep:   -> BER=%.4f PSNR=%.2f\n", row.ber, row.psnr_db);
            if (spec.verbose && !row.ok)
                std::fprintf(stderr, "sweep:   -> failed: %s\n", row.error.c_str());
            res.rows.push_back(std::move(row));
        }
    }

    // Hypothesis read-out 1: at fixed k, a larger message (larger capacity
    // ratio rho) should extract no better (BER non-decreasing in |M|).
    std::map<int, std::vector<const SweepRow*>> by_k;
    for (const SweepRow& r : res.rows)
        if (r.ok) by_k[r.k].push_back(&r);
    for (auto& [k, rows] : by_k) {
        std::map<uint64_t, std::vector<const SweepRow*>> by_seed;
        for (const SweepRow* r : rows) by_seed[r->seed].push_back(r);
        int consistent = 0, total = 0;
        for (auto& [seed, srows] : by_seed) {
            std::vector<const SweepRow*> sorted(srows.begin(), srows.end());
            std::sort(sorted.begin(), sorted.end(),
                      [](const SweepRow* a, const SweepRow* b) { return a->msg_bits < b->msg_bits; });
            if (sorted.size() < 2) continue;
            bool mono = true;
            for (size_t i = 1; i < sorted.size(); ++i)
                if (sorted[i]->ber + 1e-12 < sorted[i - 1]->ber) mono = false;
            ++total;
            if (mono) ++consistent;
            char buf[256];
            std::string seq;
            for (const SweepRow* r : sorted) {
                std::snprintf(buf, sizeof buf, "%sBER(|M|=%d)=%.4f", seq.empty() ? "" : " <= ",
                              r->msg_bits, r->ber);
                seq += buf;
            }
            char line[512];
            std::snprintf(line, sizeof line, "k=%d seed=%llu: %s [%s]", k,
                          (unsigned long long)seed, seq.c_str(), mono ? "consistent" : "violated");
            res.notes.push_back(line);
        }
        if (total > 0) {
            char line[256];
            std::snprintf(line, sizeof line,
                          "hypothesis (higher capacity ratio -> higher BER) holds at k=%d for %d/%d seeds",
                          k, consistent, total);
            res.notes.push_back(line);
        }
    }

    // Read-out 2: equal rho across different k should give similar BER.
    std::map<std::pair<long long, uint64_t>, std::vector<const SweepRow*>> by_rho;
    for (const SweepRow& r : res.rows)
        if (r.ok) by_rho[{llround(r.rho * 1e9), r.seed}].push_back(&r);
    for (auto& [key, rows] : by_rho) {
        if (rows.size() < 2) continue;
        bool multi_k = false;
        for (const SweepRow* r : rows)
            if (r->k != rows[0]->k) multi_k = true;
        if (!multi_k) continue;
        std::string seq;
        char buf[128];
        double lo = 1e9, hi = -1e9;
        for (const SweepRow* r : rows) {
            std::snprintf(buf, sizeof buf, "%s(k=%d,|M|=%d)->BER %.4f", seq.empty() ? "" : ", ",
                          r->k, r->msg_bits, r->ber);
            seq += buf;
            lo = std::min(lo, r->ber);
            hi = std::max(hi, r->ber);
        }
        char line[512];
        std::snprintf(line, sizeof line, "equal rho %.4f seed=%llu: %s (spread %.4f)",
                      rows[0]->rho, (unsigned long long)key.second, seq.c_str(), hi - lo);
        res.notes.push_back(line);
    }
    return res;
}

std::string sweep_json(const SweepSpec& spec, const SweepResult& r) {
    ordered_json j;
    j["budget_steps"] = spec.budget_steps;
    j["batch_size"] = spec.batch_size;
    j["seeds"] = spec.seeds;
    j["runs"] = ordered_json::array();
    for (const SweepRow& row : r.rows) {
        ordered_json jr;
        jr["block"] = row.block;
        jr["k"] = row.k;
        jr["msg_bits"] = row.msg_bits;
        jr["seed"] = row.seed;
        jr["ok"] = row.ok;
        if (!row.ok) jr["error"] = row.error;
        jr["rho"] = row.rho;
        jr["bpp"] = row.bpp;
        if (row.ok) {
            jr["ber"] = row.ber;
            jr["ber_quantized"] = row.ber_quantized;
            jr["psnr_db"] = json_safe(row.psnr_db);
            jr["mae"] = row.mae;
            jr["steps"] = row.steps;
        }
        j["runs"].push_back(std::move(jr));
    }
    j["notes"] = r.notes;
    return j.dump(2) + "\n";
}

std::string sweep_text(const SweepResult& r) {
    std::string s = "block    k  |M|        seed      rho      bpp      BER     BERq    PSNR      MAE\n";
    char line[256];
    for (const SweepRow& row : r.rows) {
        if (row.ok)
            std::snprintf(line, sizeof line, "%5d %4d %4d %11llu %8.4f %8.4f %8.4f %8.4f %7.2f %8.4f\n",
                          row.block, row.k, row.msg_bits, (unsigned long long)row.seed, row.rho,
                          row.bpp, row.ber, row.ber_quantized, row.psnr_db, row.mae);
        else
            std::snprintf(line, sizeof line, "%5d %4d %4d %11llu  FAILED: %s\n", row.block, row.k,
                          row.msg_bits, (unsigned long long)row.seed, row.error.c_str());
        s += line;
    }
    s += "\n";
    for (const std::string& n : r.notes) s += n + "\n";
    return s;
}

} // namespace stegnet
