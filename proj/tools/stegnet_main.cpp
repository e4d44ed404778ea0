// Command-line front end: train / embed / extract / bench / sweep / inspect.
// Exit codes: 0 success, 1 usage or internal error, 2 bad input data,
// 3 integrity failure (corrupt checkpoint, missing/corrupt message frame).
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "stegnet/bench.hpp"
#include "stegnet/codec.hpp"
#include "stegnet/common.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/trainer.hpp"

namespace {

using namespace stegnet;

std::vector<uint8_t> read_payload_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open message file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

std::vector<uint64_t> parse_seed_list(const std::string& s) {
    std::vector<uint64_t> seeds;
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t end = s.find(',', pos);
        std::string tok = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        size_t a = tok.find_first_not_of(" \t");
        if (a != std::string::npos) {
            tok = tok.substr(a, tok.find_last_not_of(" \t") - a + 1);
            try {
                size_t used = 0;
                unsigned long long v = std::stoull(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                seeds.push_back(v);
            } catch (const std::exception&) {
                throw Error("malformed seed '" + tok + "' in seed list");
            }
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    if (seeds.empty()) throw Error("empty seed list");
    return seeds;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc | std::ios::binary);
    if (!f) throw DataError("cannot open report file for writing: " + path);
    f << text;
    if (!f.flush()) throw DataError("write failed: " + path);
}

int64_t params_with_prefix(const ModelConfig& cfg, const std::string& prefix, bool invert = false) {
    int64_t n = 0;
    for (const auto& [name, shape] : param_shapes(cfg)) {
        bool hit = name.rfind(prefix, 0) == 0;
        if (hit != invert) n += Tensor::checked_numel(shape);
    }
    return n;
}

void cmd_inspect(const std::string& model_path) {
    Checkpoint ck = load_checkpoint(model_path);
    const ModelConfig& cfg = ck.cfg;
    FeatureCapacity fc = feature_capacity(cfg.k, cfg.msg_bits);
    Complexity cx = model_complexity(cfg);

    std::printf("checkpoint: %s (CRC verified)\n", model_path.c_str());
    std::printf("config: block=%d  k=%d  msg_bits=%d  seed=%llu\n", cfg.block, cfg.k, cfg.msg_bits,
                (unsigned long long)cfg.seed);
    std::printf("loss weights: lambda_i=%g  lambda_m=%g  lambda_g=%g  lr=%g\n", cfg.lambda_i,
                cfg.lambda_m, cfg.lambda_g, cfg.lr);
    std::printf("training: step=%lld", (long long)ck.step);
    if (ck.best_val_ber >= 0)
        std::printf("  best val BER=%.4f  best val PSNR=%.2f dB", ck.best_val_ber, ck.best_val_psnr);
    std::printf("\n\n");

    auto enc = encoder_channels(cfg);
    auto dec = decoder_channels(cfg);
    std::string s;
    for (size_t i = 0; i < enc.size(); ++i) s += (i ? "-" : "") + std::to_string(enc[i]);
    std::printf("encoder channels: %s (each stage halves the spatial side)\n", s.c_str());
    s.clear();
    for (size_t i = 0; i < dec.size(); ++i) s += (i ? "-" : "") + std::to_string(dec[i]);
    std::printf("decoder channels: %s (bottleneck carries %lld feature + %lld message planes)\n",
                s.c_str(), (long long)fc.f_c, (long long)fc.m_c);
    std::printf("capacity ratio rho = |M|/(2^k)^2 = %.6f   payload density = %.4f bits/pixel\n\n",
                fc.rho, bits_per_pixel(cfg.block, cfg.msg_bits));

    int64_t emb = params_with_prefix(cfg, "embedder.");
    int64_t ext = params_with_prefix(cfg, "extractor.");
    int64_t dis = params_with_prefix(cfg, "discriminator.");
    std::printf("parameters: embedder %lld, extractor %lld, discriminator %lld, total %lld\n",
                (long long)emb, (long long)ext, (long long)dis, (long long)cx.params);
    std::printf("FLOPs per block embed: %lld (%.4f G)\n", (long long)cx.flops,
                double(cx.flops) / 1e9);
    if (cfg.block == 128 && cfg.k == 4 && cfg.msg_bits == 64)
        std::printf("reference for this config: published 1.2553M params / 0.3834 GFLOPs; this build: "
                    "%.4fM embed+extract params\n",
                    double(emb + ext) / 1e6);
    std::printf("tensors: %zu\n", ck.params.size());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-scale autoencoder image steganography"};
    app.require_subcommand(1);

    // ---- train ----
    auto* t = app.add_subcommand("train", "train a model on a directory of images");
    struct {
        std::string data, out, log;
        ModelConfig cfg;
        int epochs = 150, batch = 30;
        bool quiet = false;
    } topt;
    t->add_option("--data", topt.data, "directory of training images")->required();
    t->add_option("--out", topt.out, "output checkpoint path (best model)")->required();
    t->add_option("--block", topt.cfg.block, "block size B")->capture_default_str();
    t->add_option("--k", topt.cfg.k, "downsampling stages")->capture_default_str();
    t->add_option("--msg-bits", topt.cfg.msg_bits, "message bits per block")->capture_default_str();
    t->add_option("--epochs", topt.epochs)->capture_default_str();
    t->add_option("--batch", topt.batch)->capture_default_str();
    t->add_option("--lr", topt.cfg.lr)->capture_default_str();
    t->add_option("--seed", topt.cfg.seed)->capture_default_str();
    t->add_option("--lambda-i", topt.cfg.lambda_i, "image loss weight")->capture_default_str();
    t->add_option("--lambda-m", topt.cfg.lambda_m, "message loss weight")->capture_default_str();
    t->add_option("--lambda-g", topt.cfg.lambda_g, "adversarial loss weight")->capture_default_str();
    t->add_option("--log", topt.log, "CSV log path (default: <out>.csv)");
    t->add_flag("--quiet", topt.quiet, "suppress per-epoch progress");
    t->callback([&topt] {
        TrainRun run;
        run.cfg = topt.cfg;
        run.data_dir = topt.data;
        run.epochs = topt.epochs;
        run.batch_size = topt.batch;
        run.out_best = topt.out;
        run.out_final = topt.out + ".final";
        run.log_csv = topt.log.empty() ? topt.out + ".csv" : topt.log;
        run.verbose = !topt.quiet;
        TrainResult res = train(run);
        std::printf("trained %lld steps over %zu epochs\n", (long long)res.steps_run,
                    res.history.size());
        std::printf("best: val BER=%.4f  val PSNR=%.2f dB (step %lld)\n", res.best.best_val_ber,
                    res.best.best_val_psnr, (long long)res.best.step);
        std::printf("wrote %s (best), %s (final), %s (log)\n", topt.out.c_str(),
                    run.out_final.c_str(), run.log_csv.c_str());
    });

    // ---- embed ----
    auto* e = app.add_subcommand("embed", "hide a message in a cover image");
    struct {
        std::string model, cover, message, message_file, out;
        uint64_t seed = 1;
    } eopt;
    e->add_option("--model", eopt.model, "checkpoint path")->required();
    e->add_option("--cover", eopt.cover, "cover image (PNG or PPM)")->required();
    auto* payload_group = e->add_option_group("payload", "message source (exactly one)");
    payload_group->add_option("--message", eopt.message, "message text");
    payload_group->add_option("--message-file", eopt.message_file, "file with message bytes");
    payload_group->require_option(1);
    e->add_option("--out", eopt.out, "output stego image (.png or .ppm)")->required();
    e->add_option("--seed", eopt.seed, "seed for filler bits")->capture_default_str();
    e->callback([&eopt] {
        validate_stego_path(eopt.out); // refuse a lossy --out before embedding
        Checkpoint ck = load_checkpoint(eopt.model);
        Image8 cover = read_image(eopt.cover);
        std::vector<uint8_t> payload;
        if (!eopt.message_file.empty()) payload = read_payload_file(eopt.message_file);
        else payload.assign(eopt.message.begin(), eopt.message.end());
        EmbedStats st;
        Image8 stego = embed_message(ck, cover, payload, eopt.seed, &st);
        write_image(stego, eopt.out);
        std::printf("embedded %zu payload bytes (%lld frame bits) into %d interior / %d total blocks\n",
                    payload.size(), (long long)st.frame_bits, st.blocks_interior, st.blocks_total);
        std::printf("capacity used: %zu / %lld bytes\n", payload.size(),
                    (long long)st.capacity_bytes);
        std::printf("stego PSNR vs cover: %.2f dB\n", st.psnr_db);
        std::printf("wrote %s\n", eopt.out.c_str());
    });

    // ---- extract ----
    auto* x = app.add_subcommand("extract", "recover a hidden message");
    struct {
        std::string model, stego, out;
    } xopt;
    x->add_option("--model", xopt.model, "checkpoint path")->required();
    x->add_option("--stego", xopt.stego, "stego image")->required();
    x->add_option("--out", xopt.out, "write payload here instead of stdout");
    x->callback([&xopt] {
        Checkpoint ck = load_checkpoint(xopt.model);
        Image8 stego = read_image(xopt.stego);
        std::vector<uint8_t> payload = extract_message(ck, stego);
        if (!xopt.out.empty()) {
            std::ofstream f(xopt.out, std::ios::binary | std::ios::trunc);
            if (!f) throw DataError("cannot open output file: " + xopt.out);
            f.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
            if (!f.flush()) throw DataError("write failed: " + xopt.out);
            std::fprintf(stderr, "extracted %zu bytes (frame CRC OK) -> %s\n", payload.size(),
                         xopt.out.c_str());
        } else {
            std::fwrite(payload.data(), 1, payload.size(), stdout);
            std::fflush(stdout);
            std::fprintf(stderr, "extracted %zu bytes (frame CRC OK)\n", payload.size());
        }
    });

    // ---- bench ----
    auto* b = app.add_subcommand("bench", "measure quality/robustness over a directory");
    struct {
        std::string model, data, report, diff_dir;
        int repeats = 100;
        uint64_t seed = 1;
    } bopt;
    b->add_option("--model", bopt.model)->required();
    b->add_option("--data", bopt.data, "directory of cover images")->required();
    b->add_option("--repeats", bopt.repeats, "random messages per image")->capture_default_str();
    b->add_option("--report", bopt.report, "JSON report path")->required();
    b->add_option("--diff-dir", bopt.diff_dir, "write amplified |cover-stego| images here");
    b->add_option("--seed", bopt.seed)->capture_default_str();
    b->callback([&bopt] {
        Checkpoint ck = load_checkpoint(bopt.model);
        BenchReport rep = bench(ck, bopt.data, bopt.repeats, bopt.seed, bopt.diff_dir, true);
        write_text_file(bopt.report, report_json(rep));
        std::printf("%s", report_text(rep).c_str());
        std::printf("wrote %s\n", bopt.report.c_str());
    });

    // ---- sweep ----
    auto* w = app.add_subcommand("sweep", "train and compare several (B,k,|M|) configurations");
    struct {
        std::string data, spec, seeds, report;
        int64_t budget = 0;
        int batch = 8;
    } wopt;
    w->add_option("--data", wopt.data)->required();
    w->add_option("--spec", wopt.spec, "semicolon list of B,k,M triples")->required();
    w->add_option("--budget-steps", wopt.budget, "training steps per run")->required();
    w->add_option("--seeds", wopt.seeds, "comma-separated seed list")->required();
    w->add_option("--report", wopt.report, "JSON report path")->required();
    w->add_option("--batch", wopt.batch, "batch size per run")->capture_default_str();
    w->callback([&wopt] {
        SweepSpec spec;
        spec.tuples = parse_sweep_spec(wopt.spec);
        spec.seeds = parse_seed_list(wopt.seeds);
        spec.budget_steps = wopt.budget;
        spec.batch_size = wopt.batch;
        spec.verbose = true;
        SweepResult res = sweep(spec, wopt.data);
        write_text_file(wopt.report, sweep_json(spec, res));
        std::printf("%s", sweep_text(res).c_str());
        std::printf("wrote %s\n", wopt.report.c_str());
    });

    // ---- inspect ----
    auto* i = app.add_subcommand("inspect", "print a checkpoint's architecture and stats");
    struct {
        std::string model;
    } iopt;
    i->add_option("--model", iopt.model)->required();
    i->callback([&iopt] { cmd_inspect(iopt.model); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& pe) {
        int rc = app.exit(pe);
        return rc == 0 ? 0 : 1; // help/version exit 0; usage errors exit 1
    } catch (const stegnet::IntegrityError& ie) {
        std::cerr << "error: " << ie.what() << "\n";
        return 3;
    } catch (const stegnet::DataError& de) {
        std::cerr << "error: " << de.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
}
