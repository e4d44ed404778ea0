#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "stegnet/common.hpp"
#include "stegnet/metrics.hpp"
#include "testutil.hpp"

using namespace stegnet;

namespace {

// Straight-from-definition oracles, written as differently as practical
// from the library code (direct window loops, no separable filtering).

double oracle_psnr(const Image8& a, const Image8& b) {
    double se = 0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        double d = double(a.rgb[i]) - double(b.rgb[i]);
        se += d * d;
    }
    double mse = se / double(a.rgb.size());
    if (mse == 0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(255.0) - 10.0 * std::log10(mse);
}

double oracle_mae(const Image8& a, const Image8& b) {
    double s = 0;
    for (size_t i = 0; i < a.rgb.size(); ++i) s += std::fabs(double(a.rgb[i]) - double(b.rgb[i]));
    return s / double(a.rgb.size());
}

// Direct 11x11 windowed SSIM: builds the 2-D kernel explicitly and slides
// it over every valid position, computing weighted moments in place.
double oracle_ssim(const Image8& ia, const Image8& ib) {
    int w = ia.w, h = ia.h;
    std::vector<double> A(size_t(w) * h), B(size_t(w) * h);
    for (int i = 0; i < w * h; ++i) {
        const uint8_t* pa = ia.rgb.data() + size_t(i) * 3;
        const uint8_t* pb = ib.rgb.data() + size_t(i) * 3;
        A[size_t(i)] = 0.299 * pa[0] + 0.587 * pa[1] + 0.114 * pa[2];
        B[size_t(i)] = 0.299 * pb[0] + 0.587 * pb[1] + 0.114 * pb[2];
    }
    double kern[11][11], ksum = 0;
    for (int dy = 0; dy < 11; ++dy)
        for (int dx = 0; dx < 11; ++dx) {
            double ry = dy - 5.0, rx = dx - 5.0;
            kern[dy][dx] = std::exp(-(rx * rx + ry * ry) / (2.0 * 1.5 * 1.5));
            ksum += kern[dy][dx];
        }
    for (auto& row : kern)
        for (double& v : row) v /= ksum;

    const double c1 = 6.5025, c2 = 58.5225; // (0.01*255)^2, (0.03*255)^2
    double total = 0;
    int count = 0;
    for (int y = 0; y + 11 <= h; ++y)
        for (int x = 0; x + 11 <= w; ++x) {
            double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
            for (int dy = 0; dy < 11; ++dy)
                for (int dx = 0; dx < 11; ++dx) {
                    double va = A[size_t(y + dy) * w + x + dx];
                    double vb = B[size_t(y + dy) * w + x + dx];
                    double k = kern[dy][dx];
                    mx += k * va;
                    my += k * vb;
                    mxx += k * va * va;
                    myy += k * vb * vb;
                    mxy += k * va * vb;
                }
            double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
            total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    return total / count;
}

Image8 perturb(const Image8& src, Rng& rng, int max_delta) {
    Image8 out = src;
    for (auto& v : out.rgb) {
        int d = int(rng.below(uint64_t(2 * max_delta + 1))) - max_delta;
        int nv = int(v) + d;
        v = uint8_t(std::min(255, std::max(0, nv)));
    }
    return out;
}

} // namespace

TEST_CASE("psnr and mae agree with the direct oracles on random pairs") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 16 + int(rng.below(40)), h = 16 + int(rng.below(40));
        Image8 a = testutil::synth_image(rng, w, h);
        Image8 b = perturb(a, rng, 1 + trial % 7);
        CHECK(psnr_u8(a, b) == doctest::Approx(oracle_psnr(a, b)).epsilon(1e-6));
        CHECK(mae_u8(a, b) == doctest::Approx(oracle_mae(a, b)).epsilon(1e-6));
    }
}

TEST_CASE("psnr sentinel and the mse=1 anchor point") {
    Rng rng(12);
    Image8 a = testutil::synth_image(rng, 24, 24);
    CHECK(std::isinf(psnr_u8(a, a)));
    CHECK(psnr_u8(a, a) > 0);

    // change exactly one unit on every subpixel -> MSE 1 -> 48.13 dB
    Image8 b = a;
    for (auto& v : b.rgb) v = v < 255 ? uint8_t(v + 1) : uint8_t(v - 1);
    CHECK(psnr_u8(a, b) == doctest::Approx(48.130803608679).epsilon(1e-9));
    CHECK(mae_u8(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psnr01 matches the 8-bit formula on scaled data") {
    Rng rng(13);
    Image8 a = testutil::synth_image(rng, 20, 20);
    Image8 b = perturb(a, rng, 3);
    Tensor ta = image_to_tensor(a), tb = image_to_tensor(b);
    // u8/255 rounds to the nearest float, so the scaled-back psnr agrees only
    // to within that rounding (~1e-7 per value)
    CHECK(psnr01(ta, tb) == doctest::Approx(psnr_u8(a, b)).epsilon(1e-5));
    CHECK(std::isinf(psnr01(ta, ta)));
}

TEST_CASE("bit error rate counts mismatches") {
    CHECK(bit_error_rate({0, 1, 0, 1}, {0, 1, 0, 1}) == 0.0);
    CHECK(bit_error_rate({0, 1, 0, 1}, {1, 0, 1, 0}) == 1.0);
    CHECK(bit_error_rate({0, 1, 1, 0}, {0, 1, 0, 0}) == doctest::Approx(0.25));
    // nonzero values count as 1
    CHECK(bit_error_rate({0, 2}, {0, 1}) == 0.0);
    CHECK_THROWS_AS(bit_error_rate({0, 1}, {0}), ShapeError);
    CHECK_THROWS_AS(bit_error_rate({}, {}), ShapeError);
}

TEST_CASE("ssim agrees with a direct window-loop implementation") {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        int w = 11 + int(rng.below(36)), h = 11 + int(rng.below(36));
        Image8 a = testutil::synth_image(rng, w, h);
        Image8 b = perturb(a, rng, 1 + trial % 9);
        double mine = ssim_u8(a, b);
        double ref = oracle_ssim(a, b);
        CHECK(mine == doctest::Approx(ref).epsilon(1e-4));
        CHECK(mine > 0.0);
        CHECK(mine <= 1.0 + 1e-12);
    }
}

TEST_CASE("ssim of an image with itself is 1") {
    Rng rng(15);
    Image8 a = testutil::synth_image(rng, 32, 24);
    CHECK(ssim_u8(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    Image8 tiny = testutil::synth_image(rng, 11, 11);
    CHECK(ssim_u8(tiny, tiny) == doctest::Approx(1.0).epsilon(1e-12));
    Image8 small = testutil::synth_image(rng, 10, 11);
    CHECK_THROWS_AS(ssim_u8(small, small), ShapeError);
}

TEST_CASE("diff image amplifies absolute differences with saturation") {
    Image8 a(3, 1), b(3, 1);
    for (int i = 0; i < 9; ++i) {
        a.rgb[size_t(i)] = 100;
        b.rgb[size_t(i)] = 100;
    }
    b.rgb[0] = 103; // |d|=3  -> 45
    b.rgb[4] = 83;  // |d|=17 -> 255 (saturated)
    Image8 d = diff_image(a, b, 15);
    CHECK(d.rgb[0] == 45);
    CHECK(d.rgb[1] == 0);
    CHECK(d.rgb[4] == 255);

    Image8 wrong(2, 1);
    CHECK_THROWS_AS(diff_image(a, wrong), ShapeError);
}
