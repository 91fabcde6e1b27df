#include "casrnn/gru.hpp"

#include "casrnn/errors.hpp"

namespace casrnn {

GruParams::GruParams(std::size_t input, std::size_t hidden)
    : input_dim(input),
      hidden_dim(hidden),
      update_in({hidden, input}),
      update_rec({hidden, hidden}),
      cand_in({hidden, input}),
      cand_rec({hidden, hidden}),
      reset_in({hidden, input}),
      reset_rec({hidden, hidden}) {
    if (input == 0 || hidden == 0) throw ArgumentError("GRU dims must be >= 1");
}

void GruParams::init(Rng& rng) {
    glorot_init(update_in, input_dim, hidden_dim, rng);
    glorot_init(update_rec, hidden_dim, hidden_dim, rng);
    glorot_init(cand_in, input_dim, hidden_dim, rng);
    glorot_init(cand_rec, hidden_dim, hidden_dim, rng);
    glorot_init(reset_in, input_dim, hidden_dim, rng);
    glorot_init(reset_rec, hidden_dim, hidden_dim, rng);
}

ParamRefs GruParams::params() {
    return {&update_in, &update_rec, &cand_in, &cand_rec, &reset_in, &reset_rec};
}

NamedParamRefs GruParams::named_params(const std::string& prefix) {
    return {{prefix + ".update.in", &update_in},   {prefix + ".update.rec", &update_rec},
            {prefix + ".cand.in", &cand_in},       {prefix + ".cand.rec", &cand_rec},
            {prefix + ".reset.in", &reset_in},     {prefix + ".reset.rec", &reset_rec}};
}

Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev,
                GruStepCache& cache) {
    if (x_t.rank() != 1 || x_t.dim(0) != p.input_dim) {
        throw ShapeError("gru_step: input " + x_t.shape_str() + " vs input_dim " +
                         std::to_string(p.input_dim));
    }
    if (h_prev.rank() != 1 || h_prev.dim(0) != p.hidden_dim) {
        throw ShapeError("gru_step: hidden " + h_prev.shape_str() + " vs hidden_dim " +
                         std::to_string(p.hidden_dim));
    }
    const std::size_t h = p.hidden_dim;

    Tensor update = matvec(p.update_in.value, x_t);
    {
        Tensor rec = matvec(p.update_rec.value, h_prev);
        for (std::size_t i = 0; i < h; ++i) update[i] = sigmoid(update[i] + rec[i]);
    }
    Tensor reset = matvec(p.reset_in.value, x_t);
    {
        Tensor rec = matvec(p.reset_rec.value, h_prev);
        for (std::size_t i = 0; i < h; ++i) reset[i] = sigmoid(reset[i] + rec[i]);
    }
    Tensor gated({h});
    for (std::size_t i = 0; i < h; ++i) gated[i] = reset[i] * h_prev[i];
    Tensor cand = matvec(p.cand_in.value, x_t);
    {
        Tensor rec = matvec(p.cand_rec.value, gated);
        for (std::size_t i = 0; i < h; ++i) cand[i] = std::tanh(cand[i] + rec[i]);
    }
    Tensor h_t({h});
    for (std::size_t i = 0; i < h; ++i) {
        h_t[i] = (1.0 - update[i]) * h_prev[i] + update[i] * cand[i];
    }

    cache.input = x_t;
    cache.h_prev = h_prev;
    cache.update = std::move(update);
    cache.reset = std::move(reset);
    cache.cand = std::move(cand);
    return h_t;
}

Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev) {
    GruStepCache scratch;
    return gru_step(p, x_t, h_prev, scratch);
}

Tensor gru_forward(const GruParams& p, const std::vector<Tensor>& seq, const Tensor& h0,
                   GruSequenceCache& cache) {
    if (seq.empty()) throw ArgumentError("gru_forward: empty sequence");
    cache.steps.clear();
    cache.steps.resize(seq.size());
    Tensor h = h0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        h = gru_step(p, seq[t], h, cache.steps[t]);
    }
    return h;
}

Tensor gru_forward(const GruParams& p, const std::vector<Tensor>& seq, const Tensor& h0) {
    GruSequenceCache scratch;
    return gru_forward(p, seq, h0, scratch);
}

std::vector<Tensor> gru_backward(GruParams& p, const GruSequenceCache& cache,
                                 const Tensor& d_h_last) {
    if (cache.steps.empty()) throw StateError("gru_backward: empty cache");
    const std::size_t h = p.hidden_dim;
    const std::size_t d = p.input_dim;
    for (const GruStepCache& step : cache.steps) {
        if (step.h_prev.size() != h || step.input.size() != d) {
            throw StateError("gru_backward: cache recorded " + step.input.shape_str() +
                             "/" + step.h_prev.shape_str() + " but params expect D=" +
                             std::to_string(d) + ", H=" + std::to_string(h));
        }
    }
    if (d_h_last.rank() != 1 || d_h_last.dim(0) != h) {
        throw ShapeError("gru_backward: cotangent " + d_h_last.shape_str() +
                         " vs hidden_dim " + std::to_string(h));
    }

    std::vector<Tensor> d_inputs(cache.steps.size());
    Tensor dh = d_h_last;  // d(loss)/d(h_t), walked backwards

    for (std::size_t idx = cache.steps.size(); idx-- > 0;) {
        const GruStepCache& s = cache.steps[idx];

        // h_t = (1-u).h_prev + u.c
        Tensor d_cand({h}), d_update({h}), dh_prev({h});
        for (std::size_t i = 0; i < h; ++i) {
            d_cand[i] = dh[i] * s.update[i];
            d_update[i] = dh[i] * (s.cand[i] - s.h_prev[i]);
            dh_prev[i] = dh[i] * (1.0 - s.update[i]);
        }

        // Through the activations to the pre-activation sums.
        Tensor da_cand({h}), da_update({h});
        for (std::size_t i = 0; i < h; ++i) {
            da_cand[i] = d_cand[i] * (1.0 - s.cand[i] * s.cand[i]);
            da_update[i] = d_update[i] * s.update[i] * (1.0 - s.update[i]);
        }

        Tensor gated({h});
        for (std::size_t i = 0; i < h; ++i) gated[i] = s.reset[i] * s.h_prev[i];

        add_outer(p.cand_in, da_cand, s.input);
        add_outer(p.cand_rec, da_cand, gated);
        add_outer(p.update_in, da_update, s.input);
        add_outer(p.update_rec, da_update, s.h_prev);

        Tensor d_gated = matvec_t(p.cand_rec.value, da_cand);
        Tensor da_reset({h});
        for (std::size_t i = 0; i < h; ++i) {
            dh_prev[i] += d_gated[i] * s.reset[i];
            da_reset[i] = d_gated[i] * s.h_prev[i] * s.reset[i] * (1.0 - s.reset[i]);
        }
        add_outer(p.reset_in, da_reset, s.input);
        add_outer(p.reset_rec, da_reset, s.h_prev);

        Tensor dx = matvec_t(p.cand_in.value, da_cand);
        {
            Tensor t = matvec_t(p.update_in.value, da_update);
            for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += t[j];
            t = matvec_t(p.reset_in.value, da_reset);
            for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += t[j];
        }
        {
            Tensor t = matvec_t(p.update_rec.value, da_update);
            for (std::size_t i = 0; i < h; ++i) dh_prev[i] += t[i];
            t = matvec_t(p.reset_rec.value, da_reset);
            for (std::size_t i = 0; i < h; ++i) dh_prev[i] += t[i];
        }

        d_inputs[idx] = std::move(dx);
        dh = std::move(dh_prev);
    }
    return d_inputs;
}

}  // namespace casrnn
