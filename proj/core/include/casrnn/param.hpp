#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "casrnn/rng.hpp"
#include "casrnn/tensor.hpp"

namespace casrnn {

// A trainable tensor paired with a same-shape gradient accumulator. Backward
// passes add into grad; the training loop owns the zero / accumulate / step
// cycle.
struct Param {
    Tensor value;
    Tensor grad;

    Param() = default;
    explicit Param(std::vector<std::size_t> shape) : value(shape), grad(std::move(shape)) {}

    static Param scalar(double v) {
        Param p({1});
        p.value[0] = v;
        return p;
    }

    void zero_grad() { grad.fill(0.0); }
};

// Non-owning view over a model's parameters, in a canonical stable order.
using ParamRefs = std::vector<Param*>;
using NamedParamRefs = std::vector<std::pair<std::string, Param*>>;

// Glorot-uniform fill: +/- sqrt(6 / (fan_in + fan_out)).
void glorot_init(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

void zero_grads(const ParamRefs& params);

// grad *= factor, for turning batch-summed gradients into batch means.
void scale_grads(const ParamRefs& params, double factor);

// Rank-2 gradient update grad[i][j] += u[i] * v[j]; the shape of every
// weight-matrix gradient term in the backward passes.
void add_outer(Param& p, const Tensor& u, const Tensor& v);

// FNV-1a over the raw value bytes; detects any bit-level parameter change.
std::uint64_t params_hash(const ParamRefs& params);

// Mini-batch SGD settings. Defaults follow the reference experiment protocol.
struct SgdConfig {
    double learning_rate = 0.001;
    int batch_size = 64;
    int epochs = 300;
    std::uint64_t seed = 1;

    void validate() const;
};

// value -= lr * grad for every param, then grads are zeroed.
// Precondition: grads hold the mean-batch gradient.
void sgd_step(const ParamRefs& params, const SgdConfig& cfg);

}  // namespace casrnn
