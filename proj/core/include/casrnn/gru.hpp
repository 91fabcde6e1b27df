#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "casrnn/param.hpp"
#include "casrnn/tensor.hpp"

namespace casrnn {

// Gated recurrent unit parameters. No gate biases: the recurrence is
//   u_t = sigmoid(update_in x_t + update_rec h_{t-1})
//   r_t = sigmoid(reset_in  x_t + reset_rec  h_{t-1})
//   c_t = tanh(cand_in x_t + cand_rec (r_t . h_{t-1}))
//   h_t = (1 - u_t) . h_{t-1} + u_t . c_t
// where . is elementwise multiplication.
struct GruParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;

    Param update_in;   // [H x D]
    Param update_rec;  // [H x H]
    Param cand_in;     // [H x D]
    Param cand_rec;    // [H x H]
    Param reset_in;    // [H x D]
    Param reset_rec;   // [H x H]

    GruParams() = default;
    GruParams(std::size_t input, std::size_t hidden);

    void init(Rng& rng);

    ParamRefs params();
    NamedParamRefs named_params(const std::string& prefix);
};

// Everything gru_step needs to replay for the backward pass.
struct GruStepCache {
    Tensor input;    // x_t
    Tensor h_prev;   // h_{t-1}
    Tensor update;   // u_t
    Tensor reset;    // r_t
    Tensor cand;     // c_t
};

struct GruSequenceCache {
    std::vector<GruStepCache> steps;
};

// One recurrence step. Returns h_t and appends the step cache to `cache`.
Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev,
                GruStepCache& cache);

// Convenience overload when no backward pass will follow.
Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev);

// Left fold of gru_step over a non-empty sequence, starting from h0.
// Returns the final hidden state; fills `cache` for BPTT.
Tensor gru_forward(const GruParams& p, const std::vector<Tensor>& seq, const Tensor& h0,
                   GruSequenceCache& cache);

Tensor gru_forward(const GruParams& p, const std::vector<Tensor>& seq, const Tensor& h0);

// Backprop through time. Given d(loss)/d(h_last), accumulates parameter
// gradients into p and returns d(loss)/d(x_t) for every step, in sequence
// order. Gradients are summed into whatever the accumulators already hold.
std::vector<Tensor> gru_backward(GruParams& p, const GruSequenceCache& cache,
                                 const Tensor& d_h_last);

}  // namespace casrnn
