#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "casrnn/param.hpp"
#include "casrnn/tensor.hpp"

namespace casrnn {

// Affine map from a feature vector to class logits: logits = W f + b.
struct OutputHead {
    std::size_t classes = 0;
    std::size_t in_dim = 0;
    Param weight;  // [C x F_in]
    Param bias;    // [C], zero-initialized

    OutputHead() = default;
    OutputHead(std::size_t num_classes, std::size_t input_dim);

    void init(Rng& rng);

    ParamRefs params() { return {&weight, &bias}; }
    NamedParamRefs named_params(const std::string& prefix) {
        return {{prefix + ".weight", &weight}, {prefix + ".bias", &bias}};
    }
};

Tensor head_forward(const OutputHead& head, const Tensor& features);

// Accumulates weight/bias grads and returns d(loss)/d(features).
Tensor head_backward(OutputHead& head, const Tensor& features, const Tensor& d_logits);

struct CrossEntropyResult {
    double loss = 0.0;
    Tensor d_logits;
};

// Categorical negative log-likelihood of `label` under softmax(logits),
// computed via log-sum-exp so extreme logits stay exact.
// d_logits = softmax(logits) - onehot(label).
CrossEntropyResult cross_entropy(const Tensor& logits, std::size_t label);

double cross_entropy_loss(const Tensor& logits, std::size_t label);

// The only nonlinearities the conv stack may use. Max-pool and the softmax
// head are fixed elsewhere; nothing outside this set is reachable.
enum class Activation { Tanh, Sigmoid };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

Tensor activation_forward(Activation a, const Tensor& x);
// d(loss)/d(pre-activation) given the forward output y and d(loss)/dy.
Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy);

// Valid cross-correlation, stride 1, no padding, plus a per-channel bias.
// Linear; any nonlinearity is applied by the caller.
struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    Param kernel;  // [out_ch x in_ch x kh x kw]
    Param bias;    // [out_ch]

    ConvLayer() = default;
    ConvLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw);

    void init(Rng& rng);

    ParamRefs params() { return {&kernel, &bias}; }
    NamedParamRefs named_params(const std::string& prefix) {
        return {{prefix + ".kernel", &kernel}, {prefix + ".bias", &bias}};
    }
};

// in: [in_ch x S x S] -> out: [out_ch x (S-kh+1) x (S-kw+1)].
Tensor conv_forward(const ConvLayer& layer, const Tensor& in);

// Accumulates kernel/bias grads; returns d(loss)/d(in).
Tensor conv_backward(ConvLayer& layer, const Tensor& in, const Tensor& d_out);

// 2x2 / stride-2 max pooling. Spatial dims must be even.
struct PoolCache {
    std::vector<std::size_t> shape;   // input shape
    std::vector<std::size_t> argmax;  // flat input index per output cell
};

Tensor pool_forward(const Tensor& in, PoolCache& cache);
Tensor pool_forward(const Tensor& in);

// Routes each output gradient to the argmax position (first-index tie-break,
// as recorded in the cache).
Tensor pool_backward(const PoolCache& cache, const Tensor& d_out);

}  // namespace casrnn
