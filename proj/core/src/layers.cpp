#include "casrnn/layers.hpp"

#include <cmath>

#include "casrnn/errors.hpp"

namespace casrnn {

OutputHead::OutputHead(std::size_t num_classes, std::size_t input_dim)
    : classes(num_classes), in_dim(input_dim), weight({num_classes, input_dim}),
      bias({num_classes}) {
    if (num_classes == 0 || input_dim == 0) throw ArgumentError("OutputHead dims must be >= 1");
}

void OutputHead::init(Rng& rng) {
    glorot_init(weight, in_dim, classes, rng);
    bias.value.fill(0.0);
}

Tensor head_forward(const OutputHead& head, const Tensor& features) {
    Tensor logits = matvec(head.weight.value, features);
    for (std::size_t i = 0; i < head.classes; ++i) logits[i] += head.bias.value[i];
    return logits;
}

Tensor head_backward(OutputHead& head, const Tensor& features, const Tensor& d_logits) {
    if (d_logits.size() != head.classes) {
        throw ShapeError("head_backward: d_logits " + d_logits.shape_str() + " vs C=" +
                         std::to_string(head.classes));
    }
    add_outer(head.weight, d_logits, features);
    for (std::size_t i = 0; i < head.classes; ++i) head.bias.grad[i] += d_logits[i];
    return matvec_t(head.weight.value, d_logits);
}

CrossEntropyResult cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1 || logits.size() == 0) {
        throw ShapeError("cross_entropy: logits must be a non-empty vector, got " +
                         logits.shape_str());
    }
    if (label >= logits.size()) {
        throw ArgumentError("cross_entropy: label " + std::to_string(label) +
                            " out of range for C=" + std::to_string(logits.size()));
    }
    double max = logits[0];
    for (double z : logits.data) max = std::max(max, z);
    double sum = 0.0;
    Tensor d = logits;
    for (double& z : d.data) {
        z = std::exp(z - max);
        sum += z;
    }
    const double loss = std::log(sum) + max - logits[label];
    for (double& z : d.data) z /= sum;
    d[label] -= 1.0;
    return {loss, std::move(d)};
}

double cross_entropy_loss(const Tensor& logits, std::size_t label) {
    return cross_entropy(logits, label).loss;
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    throw ArgumentError("unknown activation");
}

Activation parse_activation(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ArgumentError("unsupported activation '" + name + "' (tanh or sigmoid)");
}

Tensor activation_forward(Activation a, const Tensor& x) {
    return a == Activation::Tanh ? tanh(x) : sigmoid(x);
}

Tensor activation_backward(Activation a, const Tensor& y, const Tensor& dy) {
    if (!y.same_shape(dy)) {
        throw ShapeError("activation_backward: " + y.shape_str() + " vs " + dy.shape_str());
    }
    Tensor dx = dy;
    if (a == Activation::Tanh) {
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - y[i] * y[i];
    } else {
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
    }
    return dx;
}

ConvLayer::ConvLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw)
    : in_channels(in_ch), out_channels(out_ch), kernel_h(kh), kernel_w(kw),
      kernel({out_ch, in_ch, kh, kw}), bias({out_ch}) {
    if (in_ch == 0 || out_ch == 0 || kh == 0 || kw == 0) {
        throw ArgumentError("ConvLayer dims must be >= 1");
    }
}

void ConvLayer::init(Rng& rng) {
    glorot_init(kernel, in_channels * kernel_h * kernel_w,
                out_channels * kernel_h * kernel_w, rng);
    bias.value.fill(0.0);
}

namespace {

void check_conv_input(const ConvLayer& layer, const Tensor& in) {
    if (in.rank() != 3 || in.dim(0) != layer.in_channels) {
        throw ShapeError("conv: input " + in.shape_str() + " vs in_channels " +
                         std::to_string(layer.in_channels));
    }
    if (in.dim(1) < layer.kernel_h || in.dim(2) < layer.kernel_w) {
        throw ShapeError("conv: input " + in.shape_str() + " smaller than kernel " +
                         std::to_string(layer.kernel_h) + "x" + std::to_string(layer.kernel_w));
    }
}

}  // namespace

Tensor conv_forward(const ConvLayer& layer, const Tensor& in) {
    check_conv_input(layer, in);
    const std::size_t ic = layer.in_channels, oc = layer.out_channels;
    const std::size_t kh = layer.kernel_h, kw = layer.kernel_w;
    const std::size_t ih = in.dim(1), iw = in.dim(2);
    const std::size_t oh = ih - kh + 1, ow = iw - kw + 1;

    Tensor out({oc, oh, ow});
    const double* kp = layer.kernel.value.data.data();
    for (std::size_t o = 0; o < oc; ++o) {
        const double b = layer.bias.value[o];
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = b;
                for (std::size_t c = 0; c < ic; ++c) {
                    const double* kslice = kp + ((o * ic + c) * kh) * kw;
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const double* irow = &in.data[(c * ih + y + dy) * iw + x];
                        const double* krow = kslice + dy * kw;
                        for (std::size_t dx = 0; dx < kw; ++dx) acc += krow[dx] * irow[dx];
                    }
                }
                out.at(o, y, x) = acc;
            }
        }
    }
    return out;
}

Tensor conv_backward(ConvLayer& layer, const Tensor& in, const Tensor& d_out) {
    check_conv_input(layer, in);
    const std::size_t ic = layer.in_channels, oc = layer.out_channels;
    const std::size_t kh = layer.kernel_h, kw = layer.kernel_w;
    const std::size_t ih = in.dim(1), iw = in.dim(2);
    const std::size_t oh = ih - kh + 1, ow = iw - kw + 1;
    if (d_out.rank() != 3 || d_out.dim(0) != oc || d_out.dim(1) != oh || d_out.dim(2) != ow) {
        throw ShapeError("conv_backward: d_out " + d_out.shape_str() + " vs expected [" +
                         std::to_string(oc) + "x" + std::to_string(oh) + "x" +
                         std::to_string(ow) + "]");
    }

    Tensor d_in({ic, ih, iw});
    const double* kp = layer.kernel.value.data.data();
    double* kg = layer.kernel.grad.data.data();
    for (std::size_t o = 0; o < oc; ++o) {
        double db = 0.0;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = d_out.at(o, y, x);
                db += g;
                for (std::size_t c = 0; c < ic; ++c) {
                    const std::size_t kbase = ((o * ic + c) * kh) * kw;
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const std::size_t irow = (c * ih + y + dy) * iw + x;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            kg[kbase + dy * kw + dx] += g * in.data[irow + dx];
                            d_in.data[irow + dx] += g * kp[kbase + dy * kw + dx];
                        }
                    }
                }
            }
        }
        layer.bias.grad[o] += db;
    }
    return d_in;
}

Tensor pool_forward(const Tensor& in, PoolCache& cache) {
    if (in.rank() != 3) {
        throw ShapeError("pool: expected [C x H x W], got " + in.shape_str());
    }
    const std::size_t ch = in.dim(0), ih = in.dim(1), iw = in.dim(2);
    if (ih % 2 != 0 || iw % 2 != 0) {
        throw ShapeError("pool: spatial dims must be even, got " + in.shape_str());
    }
    const std::size_t oh = ih / 2, ow = iw / 2;
    Tensor out({ch, oh, ow});
    cache.shape = in.shape;
    cache.argmax.assign(ch * oh * ow, 0);
    for (std::size_t c = 0; c < ch; ++c) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = (c * ih + 2 * y) * iw + 2 * x;
                double best_v = in.data[best];
                // Row-major scan of the 2x2 window; strict > keeps the first
                // index on ties.
                const std::size_t cand[3] = {best + 1, best + iw, best + iw + 1};
                for (std::size_t k = 0; k < 3; ++k) {
                    if (in.data[cand[k]] > best_v) {
                        best_v = in.data[cand[k]];
                        best = cand[k];
                    }
                }
                out.at(c, y, x) = best_v;
                cache.argmax[(c * oh + y) * ow + x] = best;
            }
        }
    }
    return out;
}

Tensor pool_forward(const Tensor& in) {
    PoolCache scratch;
    return pool_forward(in, scratch);
}

Tensor pool_backward(const PoolCache& cache, const Tensor& d_out) {
    if (cache.shape.size() != 3) throw StateError("pool_backward: cache not filled");
    if (d_out.size() != cache.argmax.size()) {
        throw ShapeError("pool_backward: d_out " + d_out.shape_str() + " vs cached " +
                         std::to_string(cache.argmax.size()) + " cells");
    }
    Tensor d_in(cache.shape);
    for (std::size_t i = 0; i < cache.argmax.size(); ++i) {
        d_in.data[cache.argmax[i]] += d_out.data[i];
    }
    return d_in;
}

}  // namespace casrnn
