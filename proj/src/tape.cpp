#include "stegnet/tape.hpp"

#include <atomic>
#include <cmath>

#include "stegnet/kernels.hpp"

namespace stegnet {

namespace {
std::atomic<bool> g_finite_checks{false};
}

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled); }
bool finite_checks_enabled() { return g_finite_checks.load(); }

Tape::Var Tape::push(Tensor value, BackFn back, const char* opname) {
    if (g_finite_checks.load() && !all_finite(value))
        throw Error(std::string(opname) + ": non-finite value in forward output");
    nodes_.push_back({std::move(value), std::move(back)});
    return static_cast<Var>(nodes_.size() - 1);
}

void Tape::backward(Var loss) {
    if (nodes_[static_cast<size_t>(loss)].value.numel() != 1)
        throw ShapeError("backward: loss must be a scalar");
    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const auto& n : nodes_) grads_.emplace_back(n.value.shape);
    grads_[static_cast<size_t>(loss)].data[0] = 1.0f;
    for (int i = loss; i >= 0; --i) {
        auto& n = nodes_[static_cast<size_t>(i)];
        if (n.back) n.back(*this, grads_[static_cast<size_t>(i)]);
    }
}

namespace ops {

Var conv2d(Tape& t, Var x, Var w, Var bias, int stride) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    const Tensor& bv = t.value(bias);
    if (stride == 2 && (xv.dim(2) % 2 != 0 || xv.dim(3) % 2 != 0))
        throw ShapeError("conv2d: stride-2 requires even spatial dims, got " + shape_str(xv.shape));
    const int in_h = xv.dim(2), in_w = xv.dim(3);
    Tensor out({xv.dim(0), wv.dim(0), kernels::conv_out_dim(in_h, stride),
                kernels::conv_out_dim(in_w, stride)});
    kernels::conv2d_forward(xv, wv, &bv, stride, out);
    return t.push(std::move(out),
                  [x, w, bias, stride, in_h, in_w](Tape& tp, const Tensor& gy) {
                      kernels::conv2d_grad_input(gy, tp.value(w), stride, in_h, in_w, tp.grad_mut(x));
                      kernels::conv2d_grad_weight(tp.value(x), gy, stride, tp.grad_mut(w));
                      kernels::conv2d_grad_bias(gy, tp.grad_mut(bias));
                  },
                  "conv2d");
}

Var conv_transpose2d(Tape& t, Var x, Var w, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w); // [ci, co, 3, 3]
    const Tensor& bv = t.value(bias);
    if (xv.ndim() != 4 || wv.ndim() != 4) throw ShapeError("conv_transpose2d: expected 4-D tensors");
    if (xv.dim(1) != wv.dim(0))
        throw ShapeError("conv_transpose2d: input channels " + std::to_string(xv.dim(1)) +
                         " do not match weight channels " + std::to_string(wv.dim(0)));
    const int co = wv.dim(1);
    if (bv.numel() != co) throw ShapeError("conv_transpose2d: bias length mismatch");
    const int n = xv.dim(0), oh = 2 * xv.dim(2), ow = 2 * xv.dim(3);

    // Forward is the input-gradient of a stride-2 conv with the same weight.
    Tensor out({n, co, oh, ow});
    kernels::conv2d_grad_input(xv, wv, 2, oh, ow, out);
    const size_t plane = static_cast<size_t>(oh) * ow;
    for (int b = 0; b < n; ++b)
        for (int c = 0; c < co; ++c) {
            float* p = out.data.data() + (static_cast<size_t>(b) * co + c) * plane;
            const float bias_v = bv.data[static_cast<size_t>(c)];
            for (size_t i = 0; i < plane; ++i) p[i] += bias_v;
        }

    return t.push(std::move(out),
                  [x, w, bias](Tape& tp, const Tensor& gy) {
                      // d/dx: a stride-2 conv of gy with the same weight.
                      kernels::conv2d_forward(gy, tp.value(w), nullptr, 2, tp.grad_mut(x),
                                              /*accumulate=*/true);
                      // d/dw: weight-gradient with input/grad roles swapped.
                      kernels::conv2d_grad_weight(gy, tp.value(x), 2, tp.grad_mut(w));
                      kernels::conv2d_grad_bias(gy, tp.grad_mut(bias));
                  },
                  "conv_transpose2d");
}

Var relu(Tape& t, Var x) {
    Tensor out = t.value(x);
    for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
    return t.push(std::move(out),
                  [x](Tape& tp, const Tensor& gy) {
                      const Tensor& xv = tp.value(x);
                      Tensor& gx = tp.grad_mut(x);
                      for (size_t i = 0; i < gx.data.size(); ++i)
                          if (xv.data[i] > 0.0f) gx.data[i] += gy.data[i];
                  },
                  "relu");
}

namespace {
inline float sigmoid_scalar(float v) {
    if (v >= 0.0f) return 1.0f / (1.0f + std::exp(-v));
    const float e = std::exp(v);
    return e / (1.0f + e);
}
} // namespace

Var sigmoid(Tape& t, Var x) {
    Tensor out = t.value(x);
    for (auto& v : out.data) v = sigmoid_scalar(v);
    return t.push(std::move(out),
                  [x](Tape& tp, const Tensor& gy) {
                      const Tensor& xv = tp.value(x);
                      Tensor& gx = tp.grad_mut(x);
                      for (size_t i = 0; i < gx.data.size(); ++i) {
                          const float y = sigmoid_scalar(xv.data[i]);
                          gx.data[i] += gy.data[i] * y * (1.0f - y);
                      }
                  },
                  "sigmoid");
}

Var concat_channels(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (av.ndim() != 4 || bv.ndim() != 4) throw ShapeError("concat_channels: expected 4-D tensors");
    if (av.dim(0) != bv.dim(0) || av.dim(2) != bv.dim(2) || av.dim(3) != bv.dim(3))
        throw ShapeError("concat_channels: batch/spatial mismatch " + shape_str(av.shape) + " vs " +
                         shape_str(bv.shape));
    const int n = av.dim(0), ca = av.dim(1), cb = bv.dim(1);
    const size_t plane = static_cast<size_t>(av.dim(2)) * av.dim(3);
    Tensor out({n, ca + cb, av.dim(2), av.dim(3)});
    for (int i = 0; i < n; ++i) {
        std::copy_n(av.data.data() + static_cast<size_t>(i) * ca * plane, ca * plane,
                    out.data.data() + static_cast<size_t>(i) * (ca + cb) * plane);
        std::copy_n(bv.data.data() + static_cast<size_t>(i) * cb * plane, cb * plane,
                    out.data.data() + (static_cast<size_t>(i) * (ca + cb) + ca) * plane);
    }
    return t.push(std::move(out),
                  [a, b, n, ca, cb, plane](Tape& tp, const Tensor& gy) {
                      Tensor& ga = tp.grad_mut(a);
                      Tensor& gb = tp.grad_mut(b);
                      for (int i = 0; i < n; ++i) {
                          const float* gsrc = gy.data.data() + static_cast<size_t>(i) * (ca + cb) * plane;
                          float* pa = ga.data.data() + static_cast<size_t>(i) * ca * plane;
                          float* pb = gb.data.data() + static_cast<size_t>(i) * cb * plane;
                          for (size_t j = 0; j < ca * plane; ++j) pa[j] += gsrc[j];
                          for (size_t j = 0; j < cb * plane; ++j) pb[j] += gsrc[ca * plane + j];
                      }
                  },
                  "concat_channels");
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require_same_shape(av, bv, "add");
    Tensor out = av;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    return t.push(std::move(out),
                  [a, b](Tape& tp, const Tensor& gy) {
                      Tensor& ga = tp.grad_mut(a);
                      Tensor& gb = tp.grad_mut(b);
                      for (size_t i = 0; i < gy.data.size(); ++i) {
                          ga.data[i] += gy.data[i];
                          gb.data[i] += gy.data[i];
                      }
                  },
                  "add");
}

Var linear(Tape& t, Var x, Var w, Var bias) {
    const Tensor& xv = t.value(x); // [b, n]
    const Tensor& wv = t.value(w); // [m, n]
    const Tensor& bv = t.value(bias);
    if (xv.ndim() != 2 || wv.ndim() != 2) throw ShapeError("linear: expected 2-D input and weight");
    if (xv.dim(1) != wv.dim(1))
        throw ShapeError("linear: input width " + std::to_string(xv.dim(1)) +
                         " does not match weight " + std::to_string(wv.dim(1)));
    if (bv.numel() != wv.dim(0)) throw ShapeError("linear: bias length mismatch");
    const int n = xv.dim(0), in = xv.dim(1), m = wv.dim(0);
    Tensor out({n, m});
    for (int b = 0; b < n; ++b)
        for (int i = 0; i < m; ++i) {
            double acc = bv.data[static_cast<size_t>(i)];
            for (int j = 0; j < in; ++j) acc += static_cast<double>(wv.at2(i, j)) * xv.at2(b, j);
            out.at2(b, i) = static_cast<float>(acc);
        }
    return t.push(std::move(out),
                  [x, w, bias, n, in, m](Tape& tp, const Tensor& gy) {
                      const Tensor& xv = tp.value(x);
                      const Tensor& wv = tp.value(w);
                      Tensor& gx = tp.grad_mut(x);
                      Tensor& gw = tp.grad_mut(w);
                      Tensor& gb = tp.grad_mut(bias);
                      for (int b = 0; b < n; ++b)
                          for (int j = 0; j < in; ++j) {
                              double acc = 0.0;
                              for (int i = 0; i < m; ++i)
                                  acc += static_cast<double>(gy.at2(b, i)) * wv.at2(i, j);
                              gx.at2(b, j) += static_cast<float>(acc);
                          }
                      for (int i = 0; i < m; ++i) {
                          for (int j = 0; j < in; ++j) {
                              double acc = 0.0;
                              for (int b = 0; b < n; ++b)
                                  acc += static_cast<double>(gy.at2(b, i)) * xv.at2(b, j);
                              gw.at2(i, j) += static_cast<float>(acc);
                          }
                          double acc = 0.0;
                          for (int b = 0; b < n; ++b) acc += gy.at2(b, i);
                          gb.data[static_cast<size_t>(i)] += static_cast<float>(acc);
                      }
                  },
                  "linear");
}

Var global_avg_pool(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    if (xv.ndim() != 4) throw ShapeError("global_avg_pool: expected 4-D input");
    const int n = xv.dim(0), c = xv.dim(1);
    const size_t plane = static_cast<size_t>(xv.dim(2)) * xv.dim(3);
    Tensor out({n, c});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const float* p = xv.data.data() + (static_cast<size_t>(b) * c + ch) * plane;
            double acc = 0.0;
            for (size_t i = 0; i < plane; ++i) acc += p[i];
            out.at2(b, ch) = static_cast<float>(acc / static_cast<double>(plane));
        }
    return t.push(std::move(out),
                  [x, n, c, plane](Tape& tp, const Tensor& gy) {
                      Tensor& gx = tp.grad_mut(x);
                      const float inv = 1.0f / static_cast<float>(plane);
                      for (int b = 0; b < n; ++b)
                          for (int ch = 0; ch < c; ++ch) {
                              const float g = gy.at2(b, ch) * inv;
                              float* p = gx.data.data() + (static_cast<size_t>(b) * c + ch) * plane;
                              for (size_t i = 0; i < plane; ++i) p[i] += g;
                          }
                  },
                  "global_avg_pool");
}

Var mse_loss(Tape& t, Var a, Var b) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    require_same_shape(av, bv, "mse_loss");
    double acc = 0.0;
    for (size_t i = 0; i < av.data.size(); ++i) {
        const double d = static_cast<double>(av.data[i]) - bv.data[i];
        acc += d * d;
    }
    const double n = static_cast<double>(av.numel());
    return t.push(Tensor::scalar(static_cast<float>(acc / n)),
                  [a, b, n](Tape& tp, const Tensor& gy) {
                      const Tensor& av = tp.value(a);
                      const Tensor& bv = tp.value(b);
                      Tensor& ga = tp.grad_mut(a);
                      Tensor& gb = tp.grad_mut(b);
                      const float g = gy.data[0] * 2.0f / static_cast<float>(n);
                      for (size_t i = 0; i < av.data.size(); ++i) {
                          const float d = g * (av.data[i] - bv.data[i]);
                          ga.data[i] += d;
                          gb.data[i] -= d;
                      }
                  },
                  "mse_loss");
}

Var replicate_plane(Tape& t, Var msg, int s) {
    const Tensor& mv = t.value(msg);
    if (mv.ndim() != 2) throw ShapeError("replicate_plane: expected 2-D message");
    const int n = mv.dim(0), m = mv.dim(1);
    const size_t plane = static_cast<size_t>(s) * s;
    Tensor out({n, m, s, s});
    for (int b = 0; b < n; ++b)
        for (int i = 0; i < m; ++i) {
            float* p = out.data.data() + (static_cast<size_t>(b) * m + i) * plane;
            std::fill(p, p + plane, mv.at2(b, i));
        }
    return t.push(std::move(out),
                  [msg, n, m, plane](Tape& tp, const Tensor& gy) {
                      Tensor& gm = tp.grad_mut(msg);
                      for (int b = 0; b < n; ++b)
                          for (int i = 0; i < m; ++i) {
                              const float* p = gy.data.data() + (static_cast<size_t>(b) * m + i) * plane;
                              double acc = 0.0;
                              for (size_t j = 0; j < plane; ++j) acc += p[j];
                              gm.at2(b, i) += static_cast<float>(acc);
                          }
                  },
                  "replicate_plane");
}

Var log_clamped(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out = xv;
    for (auto& v : out.data) {
        float c = v < kLogEps ? kLogEps : (v > 1.0f - kLogEps ? 1.0f - kLogEps : v);
        v = std::log(c);
    }
    return t.push(std::move(out),
                  [x](Tape& tp, const Tensor& gy) {
                      const Tensor& xv = tp.value(x);
                      Tensor& gx = tp.grad_mut(x);
                      for (size_t i = 0; i < gx.data.size(); ++i) {
                          const float v = xv.data[i];
                          if (v > kLogEps && v < 1.0f - kLogEps) gx.data[i] += gy.data[i] / v;
                      }
                  },
                  "log_clamped");
}

Var log1m_clamped(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    Tensor out = xv;
    for (auto& v : out.data) {
        float z = 1.0f - v;
        float c = z < kLogEps ? kLogEps : (z > 1.0f - kLogEps ? 1.0f - kLogEps : z);
        v = std::log(c);
    }
    return t.push(std::move(out),
                  [x](Tape& tp, const Tensor& gy) {
                      const Tensor& xv = tp.value(x);
                      Tensor& gx = tp.grad_mut(x);
                      for (size_t i = 0; i < gx.data.size(); ++i) {
                          const float z = 1.0f - xv.data[i];
                          if (z > kLogEps && z < 1.0f - kLogEps) gx.data[i] -= gy.data[i] / z;
                      }
                  },
                  "log1m_clamped");
}

Var mean_all(Tape& t, Var x) {
    const Tensor& xv = t.value(x);
    double acc = 0.0;
    for (float v : xv.data) acc += v;
    const double n = static_cast<double>(xv.numel());
    return t.push(Tensor::scalar(static_cast<float>(acc / n)),
                  [x, n](Tape& tp, const Tensor& gy) {
                      Tensor& gx = tp.grad_mut(x);
                      const float g = gy.data[0] / static_cast<float>(n);
                      for (auto& v : gx.data) v += g;
                  },
                  "mean_all");
}

Var combine_scalars(Tape& t, const std::vector<Var>& xs, const std::vector<float>& ws) {
    if (xs.size() != ws.size()) throw ShapeError("combine_scalars: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (t.value(xs[i]).numel() != 1) throw ShapeError("combine_scalars: inputs must be scalars");
        acc += static_cast<double>(ws[i]) * t.value(xs[i]).data[0];
    }
    return t.push(Tensor::scalar(static_cast<float>(acc)),
                  [xs, ws](Tape& tp, const Tensor& gy) {
                      for (size_t i = 0; i < xs.size(); ++i)
                          tp.grad_mut(xs[i]).data[0] += ws[i] * gy.data[0];
                  },
                  "combine_scalars");
}

std::pair<Var, Var> adversarial_losses(Tape& t, Var p_cover, Var p_stego) {
    Var log_fake = mean_all(t, log1m_clamped(t, p_stego));
    Var log_real = mean_all(t, log_clamped(t, p_cover));
    Var l_d = combine_scalars(t, {log_real, log_fake}, {-1.0f, -1.0f});
    return {l_d, log_fake};
}

} // namespace ops

FdReport finite_diff_check(const ScalarFn& f, const std::vector<Tensor>& inputs, float h) {
    // Analytic gradients.
    Tape tape;
    std::vector<Tape::Var> vars;
    vars.reserve(inputs.size());
    for (const auto& in : inputs) vars.push_back(tape.leaf(in));
    Tape::Var loss = f(tape, vars);
    tape.backward(loss);

    auto eval = [&](const std::vector<Tensor>& xs) {
        Tape tp;
        std::vector<Tape::Var> vs;
        vs.reserve(xs.size());
        for (const auto& x : xs) vs.push_back(tp.leaf(x));
        return static_cast<double>(tp.value(f(tp, vs)).data[0]);
    };

    FdReport report;
    std::vector<Tensor> probe = inputs;
    for (size_t i = 0; i < inputs.size(); ++i) {
        for (size_t j = 0; j < probe[i].data.size(); ++j) {
            const float orig = probe[i].data[j];
            probe[i].data[j] = orig + h;
            const double fp = eval(probe);
            probe[i].data[j] = orig - h;
            const double fm = eval(probe);
            probe[i].data[j] = orig;
            const double numeric = (fp - fm) / (2.0 * static_cast<double>(h));
            const double analytic = tape.grad(vars[i]).data[j];
            const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
            const float rel = static_cast<float>(std::abs(analytic - numeric) / denom);
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_input = static_cast<int>(i);
                report.worst_coord = static_cast<int64_t>(j);
            }
        }
    }
    return report;
}

} // namespace stegnet
