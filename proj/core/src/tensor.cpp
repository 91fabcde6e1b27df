#include "casrnn/tensor.hpp"

#include <cmath>
#include <utility>

namespace casrnn {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> dims)
    : shape(std::move(dims)), data(shape_product(shape), 0.0) {
    for (std::size_t d : shape) {
        if (d == 0) throw ShapeError("zero dimension in shape " + shape_str());
    }
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values)
    : shape(std::move(dims)), data(std::move(values)) {
    if (data.size() != shape_product(shape)) {
        throw ShapeError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const { return casrnn::shape_str(shape); }

Tensor matvec(const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || x.rank() != 1 || a.dim(1) != x.dim(0)) {
        throw ShapeError("matvec: incompatible shapes " + a.shape_str() + " and " +
                         x.shape_str());
    }
    const std::size_t rows = a.dim(0);
    const std::size_t cols = a.dim(1);
    Tensor y({rows});
    const double* ap = a.data.data();
    const double* xp = x.data.data();
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* row = ap + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * xp[j];
        y[i] = acc;
    }
    return y;
}

Tensor matvec_t(const Tensor& a, const Tensor& x) {
    if (a.rank() != 2 || x.rank() != 1 || a.dim(0) != x.dim(0)) {
        throw ShapeError("matvec_t: incompatible shapes " + a.shape_str() + " and " +
                         x.shape_str());
    }
    const std::size_t rows = a.dim(0);
    const std::size_t cols = a.dim(1);
    Tensor y({cols});
    const double* ap = a.data.data();
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = ap + i * cols;
        const double xi = x[i];
        for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xi;
    }
    return y;
}

double sigmoid(double x) {
    // Evaluate through exp of a non-positive argument so it saturates instead
    // of overflowing.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = sigmoid(v);
    return y;
}

Tensor tanh(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = std::tanh(v);
    return y;
}

Tensor softmax(const Tensor& v) {
    if (v.size() == 0 || v.rank() != 1) {
        throw ShapeError("softmax: expected non-empty vector, got " + v.shape_str());
    }
    double max = v[0];
    for (double x : v.data) max = std::max(max, x);
    Tensor p = v;
    double sum = 0.0;
    for (double& x : p.data) {
        x = std::exp(x - max);
        sum += x;
    }
    for (double& x : p.data) x /= sum;
    return p;
}

}  // namespace casrnn
