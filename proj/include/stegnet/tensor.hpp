// Dense row-major f32 tensor. The only numeric carrier in the library:
// images, feature maps, messages and gradients all live in one of these.
// 4-D activations follow the (batch, channels, height, width) convention.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "stegnet/common.hpp"

namespace stegnet {

struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(checked_numel(shape)), 0.0f);
    }
    Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
        if (checked_numel(shape) != static_cast<int64_t>(data.size()))
            throw ShapeError("tensor data length does not match shape");
    }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, float v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }
    static Tensor scalar(float v) { return Tensor({1}, {v}); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    // 4-D accessors, (b, c, y, x) row-major.
    float& at4(int b, int c, int y, int x) {
        return data[((static_cast<size_t>(b) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    float at4(int b, int c, int y, int x) const {
        return data[((static_cast<size_t>(b) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    float& at2(int r, int c) { return data[static_cast<size_t>(r) * shape[1] + c]; }
    float at2(int r, int c) const { return data[static_cast<size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static int64_t checked_numel(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 1) throw ShapeError("tensor dimensions must be >= 1");
            n *= d;
        }
        return n;
    }
};

std::string shape_str(const std::vector<int>& s);

// Throws ShapeError with a readable message when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

bool all_finite(const Tensor& t);

} // namespace stegnet
