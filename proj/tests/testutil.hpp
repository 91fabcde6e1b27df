#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "casrnn/param.hpp"
#include "casrnn/rng.hpp"
#include "casrnn/tensor.hpp"

namespace testutil {

inline bool close(double a, double b, double tol = 1e-9) {
    return std::abs(a - b) <= tol;
}

// |a-b| <= atol + rtol*max(|a|,|b|): relative agreement with an absolute
// floor so exactly-zero gradients do not divide by zero.
inline bool grad_close(double analytic, double numeric, double atol = 1e-8,
                       double rtol = 1e-4) {
    return std::abs(analytic - numeric) <=
           atol + rtol * std::max(std::abs(analytic), std::abs(numeric));
}

struct GradCheck {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_abs_diff = 0.0;
    std::string first_failure;

    bool ok() const { return checked > 0 && failed == 0; }
};

// Central-difference check of every element of every param against the
// analytic gradients already accumulated in param.grad. `loss` must rerun
// the forward pass from the current parameter values; it is the independent
// oracle, exercising only forward code.
inline GradCheck fd_check(const casrnn::ParamRefs& params,
                          const std::function<double()>& loss, double eps = 1e-6,
                          double atol = 1e-8, double rtol = 1e-4) {
    GradCheck result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        casrnn::Param* p = params[pi];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + eps;
            const double up = loss();
            p->value[i] = saved - eps;
            const double down = loss();
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p->grad[i];
            ++result.checked;
            result.worst_abs_diff =
                std::max(result.worst_abs_diff, std::abs(numeric - analytic));
            if (!grad_close(analytic, numeric, atol, rtol)) {
                ++result.failed;
                if (result.first_failure.empty()) {
                    result.first_failure = "param " + std::to_string(pi) + "[" +
                                           std::to_string(i) + "]: analytic " +
                                           std::to_string(analytic) + " vs numeric " +
                                           std::to_string(numeric);
                }
            }
        }
    }
    return result;
}

inline casrnn::Tensor random_tensor(std::vector<std::size_t> shape, casrnn::Rng& rng,
                                    double lo = -1.0, double hi = 1.0) {
    casrnn::Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline void randomize(casrnn::ParamRefs params, casrnn::Rng& rng, double lo = -0.8,
                      double hi = 0.8) {
    for (casrnn::Param* p : params) {
        for (double& v : p->value.data) v = rng.uniform(lo, hi);
    }
}

}  // namespace testutil
