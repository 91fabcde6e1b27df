#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "casrnn/errors.hpp"

namespace casrnn {

// Dense row-major array of doubles with an explicit shape. This is the only
// value carrier in the library; all arithmetic is 64-bit. Shapes are strict:
// there is no broadcasting, and dimension mismatches throw ShapeError.
//
// Tensors are plain values. Once built they are only mutated through their
// data() span, so sharing a const Tensor across threads is safe.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> dims);

    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    static Tensor vec(std::size_t n) { return Tensor({n}); }
    static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
    static Tensor from(std::initializer_list<double> values);
    static Tensor identity(std::size_t n);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    // Rank-2 access (row, col).
    double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    // Rank-3 access.
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    void fill(double v);

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    bool all_finite() const;

    // "[2x3]" style, for error messages.
    std::string shape_str() const;
};

std::string shape_str(const std::vector<std::size_t>& shape);

std::size_t shape_product(const std::vector<std::size_t>& shape);

// y = A x for A of shape [M x N] and x of shape [N]. Throws ShapeError naming
// both shapes on any mismatch.
Tensor matvec(const Tensor& a, const Tensor& x);

// y = A^T x for A of shape [M x N] and x of shape [M]; used by backward passes.
Tensor matvec_t(const Tensor& a, const Tensor& x);

// Elementwise nonlinearities; shapes preserved, output always finite.
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

double sigmoid(double x);

// Numerically stable softmax over a rank-1 tensor (max subtraction).
// Throws ShapeError on an empty vector.
Tensor softmax(const Tensor& v);

}  // namespace casrnn
