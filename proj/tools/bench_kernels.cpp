// Timing harness for the convolution kernels: OpenMP versions vs the serial
// reference, with a bitwise-agreement check on every shape. Run with
// --quick for a fast smoke pass.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "stegnet/kernels.hpp"
#include "stegnet/rng.hpp"

using namespace stegnet;

namespace {

struct Case {
    const char* name;
    int b, ci, co, hw, stride;
};

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

void fill(Tensor& t, Rng& rng) {
    for (auto& v : t.data) v = float(rng.normal());
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
    return m;
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        double t0 = now();
        f();
        best = std::min(best, now() - t0);
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--quick") == 0) quick = true;

    std::vector<Case> cases;
    if (quick) {
        cases = {
            {"enc 3->16 32px", 2, 3, 16, 32, 2},
            {"enc 16->32 16px", 2, 16, 32, 16, 2},
        };
    } else {
        cases = {
            {"enc0 3->32 128px", 4, 3, 32, 128, 2},
            {"enc1 32->64 64px", 4, 32, 64, 64, 2},
            {"enc2 64->128 32px", 4, 64, 128, 32, 2},
            {"enc3 128->256 16px", 4, 128, 256, 16, 2},
            {"blend 3->3 128px", 4, 3, 3, 128, 1},
        };
    }
    int reps = quick ? 2 : 5;

    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %-12s %10s %10s %8s %10s\n", "layer", "kernel", "ref ms", "omp ms", "speedup",
                "max|diff|");

    bool all_exact = true;
    Rng rng(42);
    for (const Case& c : cases) {
        int out_hw = kernels::conv_out_dim(c.hw, c.stride);
        Tensor x({c.b, c.ci, c.hw, c.hw}), w({c.co, c.ci, 3, 3}), bias({c.co});
        Tensor gy({c.b, c.co, out_hw, out_hw});
        fill(x, rng);
        fill(w, rng);
        fill(bias, rng);
        fill(gy, rng);

        struct Sub {
            const char* name;
            double ref_ms, omp_ms, diff;
        };
        std::vector<Sub> subs;

        {
            Tensor a({c.b, c.co, out_hw, out_hw}), bo(a.shape);
            double tr = time_best_of(reps, [&] { kernels::ref::conv2d_forward(x, w, &bias, c.stride, a); });
            double to = time_best_of(reps, [&] { kernels::conv2d_forward(x, w, &bias, c.stride, bo); });
            subs.push_back({"forward", tr * 1e3, to * 1e3, max_abs_diff(a, bo)});
        }
        {
            Tensor a(x.shape), bo(x.shape);
            double tr = time_best_of(reps, [&] {
                std::fill(a.data.begin(), a.data.end(), 0.0f);
                kernels::ref::conv2d_grad_input(gy, w, c.stride, c.hw, c.hw, a);
            });
            double to = time_best_of(reps, [&] {
                std::fill(bo.data.begin(), bo.data.end(), 0.0f);
                kernels::conv2d_grad_input(gy, w, c.stride, c.hw, c.hw, bo);
            });
            subs.push_back({"grad_input", tr * 1e3, to * 1e3, max_abs_diff(a, bo)});
        }
        {
            Tensor a(w.shape), bo(w.shape);
            double tr = time_best_of(reps, [&] {
                std::fill(a.data.begin(), a.data.end(), 0.0f);
                kernels::ref::conv2d_grad_weight(x, gy, c.stride, a);
            });
            double to = time_best_of(reps, [&] {
                std::fill(bo.data.begin(), bo.data.end(), 0.0f);
                kernels::conv2d_grad_weight(x, gy, c.stride, bo);
            });
            subs.push_back({"grad_weight", tr * 1e3, to * 1e3, max_abs_diff(a, bo)});
        }

        for (const Sub& s : subs) {
            std::printf("%-22s %-12s %10.3f %10.3f %7.2fx %10.3g\n", c.name, s.name, s.ref_ms,
                        s.omp_ms, s.ref_ms / s.omp_ms, s.diff);
            if (s.diff != 0.0) all_exact = false;
        }
    }

    std::printf("\nbitwise agreement: %s\n", all_exact ? "exact on every case" : "MISMATCH");
    return all_exact ? 0 : 1;
}
