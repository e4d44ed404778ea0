// Convolution kernel family: forward, input-gradient, weight-gradient,
// bias-gradient. All 3x3, padding 1, stride 1 or 2 (the only geometry the
// networks use). Transposed convolution reuses the same kernels with the
// roles of input and output gradient swapped.
//
// Two implementations:
//   kernels::ref::*  — plain sextuple loops, serial. The readable reference;
//                      tests check the optimized kernels against it.
//   kernels::*       — restructured for vectorization and OpenMP-parallel
//                      over independent output planes.
//
// Determinism contract: for a fixed input, every kernel accumulates each
// output element in a fixed order regardless of thread count, so results are
// bit-stable across runs and OMP_NUM_THREADS settings.
#pragma once

#include "stegnet/tensor.hpp"

namespace stegnet::kernels {

// out[b,co,oh,ow], oh = (h-1)/stride + 1. Overwrites out unless accumulate.
// bias may be null (treated as zero).
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                    Tensor& out, bool accumulate = false);

// Accumulates d(loss)/d(input) into gx (shape [b,ci,in_h,in_w]).
void conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int in_h, int in_w,
                       Tensor& gx);

// Accumulates d(loss)/d(weight) into gw (shape [co,ci,3,3]).
void conv2d_grad_weight(const Tensor& x, const Tensor& gy, int stride, Tensor& gw);

// Accumulates d(loss)/d(bias) into gb (shape [co]).
void conv2d_grad_bias(const Tensor& gy, Tensor& gb);

namespace ref {
void conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* bias, int stride,
                    Tensor& out, bool accumulate = false);
void conv2d_grad_input(const Tensor& gy, const Tensor& w, int stride, int in_h, int in_w,
                       Tensor& gx);
void conv2d_grad_weight(const Tensor& x, const Tensor& gy, int stride, Tensor& gw);
void conv2d_grad_bias(const Tensor& gy, Tensor& gb);
} // namespace ref

// Output spatial size of a 3x3/pad-1 convolution.
inline int conv_out_dim(int in, int stride) { return (in - 1) / stride + 1; }

} // namespace stegnet::kernels
