#include "stegnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stegnet/common.hpp"

namespace stegnet {
namespace {

void require_same_dims(const Image8& a, const Image8& b, const char* who) {
    if (a.w != b.w || a.h != b.h)
        throw ShapeError(std::string(who) + ": image dimensions differ");
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

// Separable convolution of a luma plane with a normalized 1-D Gaussian,
// sampling only positions where the full window fits.
void gauss_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& k1d,
                 std::vector<double>& tmp, std::vector<double>& dst, int& out_w, int& out_h) {
    int r = int(k1d.size()) / 2;
    out_w = w - 2 * r;
    out_h = h - 2 * r;
    tmp.assign(size_t(out_w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double s = 0.0;
            for (int i = 0; i < int(k1d.size()); ++i) s += k1d[i] * src[size_t(y) * w + x + i];
            tmp[size_t(y) * out_w + x] = s;
        }
    dst.assign(size_t(out_w) * out_h, 0.0);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double s = 0.0;
            for (int i = 0; i < int(k1d.size()); ++i) s += k1d[i] * tmp[size_t(y + i) * out_w + x];
            dst[size_t(y) * out_w + x] = s;
        }
}

std::vector<double> luma(const Image8& img) {
    std::vector<double> y(size_t(img.w) * img.h);
    for (size_t p = 0; p < y.size(); ++p) {
        const uint8_t* px = img.rgb.data() + p * 3;
        y[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return y;
}

} // namespace

double psnr_u8(const Image8& a, const Image8& b) {
    require_same_dims(a, b, "psnr_u8");
    double se = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        double d = double(a.rgb[i]) - double(b.rgb[i]);
        se += d * d;
    }
    return psnr_from_mse(se / double(a.rgb.size()));
}

double psnr01(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "psnr01");
    double se = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = (double(a.data[i]) - double(b.data[i])) * 255.0;
        se += d * d;
    }
    return psnr_from_mse(se / double(a.data.size()));
}

double mae_u8(const Image8& a, const Image8& b) {
    require_same_dims(a, b, "mae_u8");
    double s = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i)
        s += std::abs(double(a.rgb[i]) - double(b.rgb[i]));
    return s / double(a.rgb.size());
}

double bit_error_rate(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    if (a.size() != b.size()) throw ShapeError("bit_error_rate: bit vectors differ in length");
    if (a.empty()) throw ShapeError("bit_error_rate: empty bit vectors");
    size_t bad = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if ((a[i] != 0) != (b[i] != 0)) ++bad;
    return double(bad) / double(a.size());
}

double ssim_u8(const Image8& a, const Image8& b) {
    require_same_dims(a, b, "ssim_u8");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    if (a.w < kWin || a.h < kWin) throw ShapeError("ssim_u8: image smaller than the 11x11 window");

    std::vector<double> k1d(kWin);
    double ksum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        double d = i - (kWin - 1) / 2.0;
        k1d[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        ksum += k1d[i];
    }
    for (double& v : k1d) v /= ksum;

    std::vector<double> x = luma(a), y = luma(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }

    std::vector<double> tmp, mu_x, mu_y, m_xx, m_yy, m_xy;
    int ow = 0, oh = 0;
    gauss_valid(x, a.w, a.h, k1d, tmp, mu_x, ow, oh);
    gauss_valid(y, a.w, a.h, k1d, tmp, mu_y, ow, oh);
    gauss_valid(xx, a.w, a.h, k1d, tmp, m_xx, ow, oh);
    gauss_valid(yy, a.w, a.h, k1d, tmp, m_yy, ow, oh);
    gauss_valid(xy, a.w, a.h, k1d, tmp, m_xy, ow, oh);

    constexpr double kL = 255.0;
    constexpr double c1 = (0.01 * kL) * (0.01 * kL);
    constexpr double c2 = (0.03 * kL) * (0.03 * kL);
    double acc = 0.0;
    for (size_t i = 0; i < mu_x.size(); ++i) {
        double var_x = m_xx[i] - mu_x[i] * mu_x[i];
        double var_y = m_yy[i] - mu_y[i] * mu_y[i];
        double cov = m_xy[i] - mu_x[i] * mu_y[i];
        double num = (2.0 * mu_x[i] * mu_y[i] + c1) * (2.0 * cov + c2);
        double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    return acc / double(mu_x.size());
}

Image8 diff_image(const Image8& a, const Image8& b, int gain) {
    require_same_dims(a, b, "diff_image");
    Image8 out(a.w, a.h);
    for (size_t i = 0; i < a.rgb.size(); ++i) {
        int d = std::abs(int(a.rgb[i]) - int(b.rgb[i])) * gain;
        out.rgb[i] = uint8_t(std::min(d, 255));
    }
    return out;
}

} // namespace stegnet
