#include "casrnn/param.hpp"

#include <bit>
#include <cmath>

#include "casrnn/errors.hpp"

namespace casrnn {

void glorot_init(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : p.value.data) v = rng.uniform(-limit, limit);
}

void zero_grads(const ParamRefs& params) {
    for (Param* p : params) p->zero_grad();
}

void scale_grads(const ParamRefs& params, double factor) {
    for (Param* p : params) {
        for (double& g : p->grad.data) g *= factor;
    }
}

void add_outer(Param& p, const Tensor& u, const Tensor& v) {
    if (p.grad.rank() != 2 || p.grad.dim(0) != u.size() || p.grad.dim(1) != v.size()) {
        throw ShapeError("add_outer: grad " + p.grad.shape_str() + " vs outer " +
                         u.shape_str() + " * " + v.shape_str());
    }
    double* g = p.grad.data.data();
    const std::size_t cols = v.size();
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double ui = u[i];
        double* row = g + i * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += ui * v[j];
    }
}

std::uint64_t params_hash(const ParamRefs& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const Param* p : params) {
        mix(p->value.size());
        for (double v : p->value.data) mix(std::bit_cast<std::uint64_t>(v));
    }
    return h;
}

void SgdConfig::validate() const {
    if (learning_rate < 0.0) throw ArgumentError("learning_rate must be non-negative");
    if (batch_size <= 0) throw ArgumentError("batch_size must be positive");
    if (epochs <= 0) throw ArgumentError("epochs must be positive");
}

void sgd_step(const ParamRefs& params, const SgdConfig& cfg) {
    for (Param* p : params) {
        double* v = p->value.data.data();
        const double* g = p->grad.data.data();
        for (std::size_t i = 0; i < p->value.size(); ++i) v[i] -= cfg.learning_rate * g[i];
        p->zero_grad();
    }
}

}  // namespace casrnn
