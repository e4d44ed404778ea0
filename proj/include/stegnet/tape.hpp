// Reverse-mode autodiff tape. Ops append nodes in execution order; backward
// walks the node list in exact reverse order, so no topological sort is
// needed. Values are immutable once produced. One tape per forward pass;
// parameters live outside the tape and are registered as leaves each step.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "stegnet/tensor.hpp"

namespace stegnet {

// Probabilities are clamped into [kLogEps, 1 - kLogEps] before any log.
constexpr float kLogEps = 1e-6f;

// When enabled, every op verifies its output is NaN/Inf-free. Tests turn
// this on; release-path callers can leave it off.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

class Tape {
public:
    using Var = int;
    using BackFn = std::function<void(Tape&, const Tensor& gy)>;

    Var leaf(Tensor v) { return push(std::move(v), nullptr, "leaf"); }

    Var push(Tensor value, BackFn back, const char* opname);

    const Tensor& value(Var v) const { return nodes_[static_cast<size_t>(v)].value; }

    // Gradient of the last backward() target w.r.t. node v. Leaves that did
    // not participate still hold a zero gradient of the right shape.
    const Tensor& grad(Var v) const { return grads_[static_cast<size_t>(v)]; }
    Tensor& grad_mut(Var v) { return grads_[static_cast<size_t>(v)]; }

    // loss must be a single-element tensor.
    void backward(Var loss);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        BackFn back;
    };
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

namespace ops {

using Var = Tape::Var;

// 3x3 convolution, padding 1. stride 2 requires even spatial dims.
Var conv2d(Tape& t, Var x, Var w, Var bias, int stride);

// 3x3 transposed convolution, stride 2, padding 1, output padding 1:
// doubles the spatial size exactly. weight layout [ci, co, 3, 3].
Var conv_transpose2d(Tape& t, Var x, Var w, Var bias);

Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);

// y = x * W^T + b with weight [m, n], x [b, n] -> [b, m].
Var linear(Tape& t, Var x, Var w, Var bias);

Var concat_channels(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);

// [b, c, h, w] -> [b, c]
Var global_avg_pool(Tape& t, Var x);

// Mean squared difference over all elements; scalar output.
Var mse_loss(Tape& t, Var a, Var b);

// Each entry of msg [b, m] becomes a constant s x s plane: [b, m, s, s].
Var replicate_plane(Tape& t, Var msg, int s);

// Elementwise log of a probability, clamped away from {0, 1}.
Var log_clamped(Tape& t, Var x);
// Elementwise log(1 - x), clamped likewise.
Var log1m_clamped(Tape& t, Var x);

// Mean over all elements; scalar output.
Var mean_all(Tape& t, Var x);

// Scalar-valued weighted sum of scalar nodes.
Var combine_scalars(Tape& t, const std::vector<Var>& xs, const std::vector<float>& ws);

// (L_D, L_G) from discriminator outputs on cover and stego batches.
// L_G = mean log(1 - p_stego); L_D = -[mean log p_cover + mean log(1 - p_stego)].
std::pair<Var, Var> adversarial_losses(Tape& t, Var p_cover, Var p_stego);

} // namespace ops

// Central finite-difference gradient check. f builds a scalar loss from the
// given leaves; the check compares analytic gradients against (f(x+h) -
// f(x-h)) / 2h for every coordinate of every input.
struct FdReport {
    float max_rel_err = 0.0f;
    int worst_input = -1;
    int64_t worst_coord = -1;
};

using ScalarFn = std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>;

FdReport finite_diff_check(const ScalarFn& f, const std::vector<Tensor>& inputs,
                           float h = 1e-3f);

} // namespace stegnet
