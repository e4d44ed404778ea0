// Serial reference kernels. Straight-line loops over every index; the
// optimized kernels in kernels.cpp must agree with these to float precision.
#include "stegnet/kernels.hpp"

namespace stegnet::kernels::ref {

static void check_conv_args(const Tensor& x, const Tensor& w, const Tensor* bias, int stride) {
    if (x.ndim() != 4 || w.ndim() != 4) throw ShapeError("conv2d: expected 4-D input and weight");
    if (w.dim(2) != 3 || w.dim(3) != 3) throw ShapeError("conv2d: kernel must be 3x3");
    if (x.dim(1) != w.dim(1))
        throw ShapeError("conv2d: input channels " + std::to_string(x.dim(1)) +
                         " do not match weight channels " + std::to_string(w.dim(1)));
    if (bias && bias->numel() != w.dim(0)) throw ShapeError("conv2d: bias length mismatch");
    if (stride != 1 && stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");
}

void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                    Tensor& out, bool accumulate) {
    check_conv_args(x, w, bias, stride);
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0);
    const int oh = conv_out_dim(h, stride), ow = conv_out_dim(wd, stride);
    if (out.shape != std::vector<int>{n, co, oh, ow}) throw ShapeError("conv2d: bad output shape");

    for (int b = 0; b < n; ++b)
        for (int c = 0; c < co; ++c)
            for (int y = 0; y < oh; ++y)
                for (int xo = 0; xo < ow; ++xo) {
                    float acc = bias ? bias->data[c] : 0.0f;
                    for (int ic = 0; ic < ci; ++ic)
                        for (int kh = 0; kh < 3; ++kh)
                            for (int kw = 0; kw < 3; ++kw) {
                                int iy = y * stride + kh - 1;
                                int ix = xo * stride + kw - 1;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += w.at4(c, ic, kh, kw) * x.at4(b, ic, iy, ix);
                            }
                    if (accumulate)
                        out.at4(b, c, y, xo) += acc;
                    else
                        out.at4(b, c, y, xo) = acc;
                }
}

void conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int in_h, int in_w,
                       Tensor& gx) {
    const int n = gy.dim(0), co = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
    const int ci = w.dim(1);
    if (gx.shape != std::vector<int>{n, ci, in_h, in_w})
        throw ShapeError("conv2d_grad_input: bad gx shape");
    if (w.dim(0) != co) throw ShapeError("conv2d_grad_input: weight/grad channel mismatch");

    for (int b = 0; b < n; ++b)
        for (int ic = 0; ic < ci; ++ic)
            for (int c = 0; c < co; ++c)
                for (int kh = 0; kh < 3; ++kh)
                    for (int kw = 0; kw < 3; ++kw) {
                        float wv = w.at4(c, ic, kh, kw);
                        for (int y = 0; y < oh; ++y) {
                            int iy = y * stride + kh - 1;
                            if (iy < 0 || iy >= in_h) continue;
                            for (int xo = 0; xo < ow; ++xo) {
                                int ix = xo * stride + kw - 1;
                                if (ix < 0 || ix >= in_w) continue;
                                gx.at4(b, ic, iy, ix) += wv * gy.at4(b, c, y, xo);
                            }
                        }
                    }
}

void conv2d_grad_weight(const Tensor& x, const Tensor& gy, int stride, Tensor& gw) {
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
    if (gy.dim(0) != n) throw ShapeError("conv2d_grad_weight: batch mismatch");
    if (gw.shape != std::vector<int>{co, ci, 3, 3}) throw ShapeError("conv2d_grad_weight: bad gw shape");

    for (int c = 0; c < co; ++c)
        for (int ic = 0; ic < ci; ++ic)
            for (int kh = 0; kh < 3; ++kh)
                for (int kw = 0; kw < 3; ++kw) {
                    double acc = 0.0; // f32 products are exact in f64
                    for (int b = 0; b < n; ++b)
                        for (int y = 0; y < oh; ++y) {
                            int iy = y * stride + kh - 1;
                            if (iy < 0 || iy >= h) continue;
                            for (int xo = 0; xo < ow; ++xo) {
                                int ix = xo * stride + kw - 1;
                                if (ix < 0 || ix >= wd) continue;
                                acc += static_cast<double>(gy.at4(b, c, y, xo)) * x.at4(b, ic, iy, ix);
                            }
                        }
                    gw.at4(c, ic, kh, kw) += static_cast<float>(acc);
                }
}

void conv2d_grad_bias(const Tensor& gy, Tensor& gb) {
    const int n = gy.dim(0), co = gy.dim(1), oh = gy.dim(2), ow = gy.dim(3);
    if (gb.numel() != co) throw ShapeError("conv2d_grad_bias: bad gb shape");
    for (int c = 0; c < co; ++c) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b)
            for (int y = 0; y < oh; ++y)
                for (int xo = 0; xo < ow; ++xo) acc += gy.at4(b, c, y, xo);
        gb.data[static_cast<size_t>(c)] += static_cast<float>(acc);
    }
}

} // namespace stegnet::kernels::ref
