// Optimized kernels. Parallel loops split work by output plane (or filter
// pair), so no two threads ever write the same element; within one element
// the accumulation order matches the reference kernels exactly.
#include "stegnet/kernels.hpp"

#include <algorithm>

namespace stegnet::kernels {

namespace {
// Valid output ranges so the inner loops run branch-free.
// iy = y*stride + kh - 1 must fall in [0, extent).
inline int lo_for(int k) { return k == 0 ? 1 : 0; }
inline int hi_for(int k, int extent, int stride, int out_extent) {
    return std::min(out_extent, (extent - k) / stride + 1);
}
} // namespace

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                    Tensor& out, bool accumulate) {
    // Reuse the reference checks; failure modes are identical.
    if (x.ndim() != 4 || w.ndim() != 4) throw ShapeError("conv2d: expected 4-D input and weight");
    if (w.dim(2) != 3 || w.dim(3) != 3) throw ShapeError("conv2d: kernel must be 3x3");
    if (x.dim(1) != w.dim(1))
        throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) +
                         " do not match weight channels " + std::to_string(w.dim(1)));
    if (bias && bias->numel() != w.dim(0)) throw ShapeError("conv2d: bias length mismatch");
    if (stride != 1 && stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");

    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0);
    const int oh = conv_out_dim(h, stride), ow = conv_out_dim(wd, stride);
    if (out.shape != std::vector<int>{n, co, oh, ow}) throw ShapeError("conv2d: bad output shape");

    const size_t in_plane = static_cast<size_t>(h) * wd;
    const size_t out_plane = static_cast<size_t>(oh) * ow;

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < co; ++c) {
            float* po = out.data.data() + (static_cast<size_t>(b) * co + c) * out_plane;
            const float init = bias ? bias->data[c] : 0.0f;
            if (!accumulate)
                std::fill(po, po + out_plane, init);
            else if (bias)
                for (size_t i = 0; i < out_plane; ++i) po[i] += init;

            for (int ic = 0; ic < ci; ++ic) {
                const float* px = x.data.data() + (static_cast<size_t>(b) * ci + ic) * in_plane;
                for (int kh = 0; kh < 3; ++kh) {
                    const int y_lo = lo_for(kh), y_hi = hi_for(kh, h, stride, oh);
                    for (int kw = 0; kw < 3; ++kw) {
                        const float wv = w.at4(c, ic, kh, kw);
                        const int x_lo = lo_for(kw), x_hi = hi_for(kw, wd, stride, ow);
                        const int xoff = kw - 1;
                        for (int y = y_lo; y < y_hi; ++y) {
                            const float* prow = px + static_cast<size_t>(y * stride + kh - 1) * wd;
                            float* porow = po + static_cast<size_t>(y) * ow;
                            for (int xo = x_lo; xo < x_hi; ++xo)
                                porow[xo] += wv * prow[xo * stride + xoff];
                        }
                    }
                }
            }
        }
}

void conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int in_h, int in_w,
                       Tensor& gx) {
    const int n = gy.dim(0), co = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
    const int ci = w.dim(1);
    if (gx.shape != std::vector<int>{n, ci, in_h, in_w})
        throw ShapeError("conv2d_grad_input: bad gx shape");
    if (w.dim(0) != co) throw ShapeError("conv2d_grad_input: weight/grad channel mismatch");

    const size_t gy_plane = static_cast<size_t>(oh) * ow;
    const size_t gx_plane = static_cast<size_t>(in_h) * in_w;

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < n; ++b)
        for (int ic = 0; ic < ci; ++ic) {
            float* pgx = gx.data.data() + (static_cast<size_t>(b) * ci + ic) * gx_plane;
            for (int c = 0; c < co; ++c) {
                const float* pgy = gy.data.data() + (static_cast<size_t>(b) * co + c) * gy_plane;
                for (int kh = 0; kh < 3; ++kh) {
                    const int y_lo = lo_for(kh), y_hi = hi_for(kh, in_h, stride, oh);
                    for (int kw = 0; kw < 3; ++kw) {
                        const float wv = w.at4(c, ic, kh, kw);
                        const int x_lo = lo_for(kw), x_hi = hi_for(kw, in_w, stride, ow);
                        const int xoff = kw - 1;
                        for (int y = y_lo; y < y_hi; ++y) {
                            float* gxrow = pgx + static_cast<size_t>(y * stride + kh - 1) * in_w;
                            const float* gyrow = pgy + static_cast<size_t>(y) * ow;
                            for (int xo = x_lo; xo < x_hi; ++xo)
                                gxrow[xo * stride + xoff] += wv * gyrow[xo];
                        }
                    }
                }
            }
        }
}

void conv2d_grad_weight(const Tensor& x, const Tensor& gy, int stride, Tensor& gw) {
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
    if (gy.dim(0) != n) throw ShapeError("conv2d_grad_weight: batch mismatch");
    if (gw.shape != std::vector<int>{co, ci, 3, 3}) throw ShapeError("conv2d_grad_weight: bad gw shape");

    const size_t x_plane = static_cast<size_t>(h) * wd;
    const size_t gy_plane = static_cast<size_t>(oh) * ow;

#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < co; ++c)
        for (int ic = 0; ic < ci; ++ic)
            for (int kh = 0; kh < 3; ++kh) {
                const int y_lo = lo_for(kh), y_hi = hi_for(kh, h, stride, oh);
                for (int kw = 0; kw < 3; ++kw) {
                    const int x_lo = lo_for(kw), x_hi = hi_for(kw, wd, stride, ow);
                    const int xoff = kw - 1;
                    double acc = 0.0;
                    for (int b = 0; b < n; ++b) {
                        const float* px = x.data.data() + (static_cast<size_t>(b) * ci + ic) * x_plane;
                        const float* pgy = gy.data.data() + (static_cast<size_t>(b) * co + c) * gy_plane;
                        for (int y = y_lo; y < y_hi; ++y) {
                            const float* prow = px + static_cast<size_t>(y * stride + kh - 1) * wd;
                            const float* gyrow = pgy + static_cast<size_t>(y) * ow;
                            for (int xo = x_lo; xo < x_hi; ++xo)
                                acc += static_cast<double>(gyrow[xo]) * prow[xo * stride + xoff];
                        }
                    }
                    gw.at4(c, ic, kh, kw) += static_cast<float>(acc);
                }
            }
}

void conv2d_grad_bias(const Tensor& gy, Tensor& gb) {
    const int n = gy.dim(0), co = gy.dim(1);
    const size_t plane = static_cast<size_t>(gy.dim(2)) * gy.dim(3);
    if (gb.numel() != co) throw ShapeError("conv2d_grad_bias: bad gb shape");

#pragma omp parallel for schedule(static)
    for (int c = 0; c < co; ++c) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) {
            const float* p = gy.data.data() + (static_cast<size_t>(b) * co + c) * plane;
            for (size_t i = 0; i < plane; ++i) acc += p[i];
        }
        gb.data[static_cast<size_t>(c)] += static_cast<float>(acc);
    }
}

} // namespace stegnet::kernels
