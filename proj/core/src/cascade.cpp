#include "casrnn/cascade.hpp"

#include <numeric>

#include "casrnn/errors.hpp"

namespace casrnn {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Base: return "cas";
        case Variant::FeatureFusion: return "cas-f";
        case Variant::OutputFusion: return "cas-o";
        case Variant::PlainRnnBaseline: return "rnn";
    }
    throw ArgumentError("unknown variant");
}

Variant parse_variant(const std::string& name) {
    if (name == "cas") return Variant::Base;
    if (name == "cas-f") return Variant::FeatureFusion;
    if (name == "cas-o") return Variant::OutputFusion;
    if (name == "rnn") return Variant::PlainRnnBaseline;
    throw ArgumentError("unknown variant '" + name + "' (rnn, cas, cas-f, cas-o)");
}

void CascadeConfig::validate() const {
    if (bands == 0) throw ArgumentError("bands must be >= 1");
    if (classes == 0) throw ArgumentError("classes must be >= 1");
    if (hidden1 == 0 || hidden2 == 0) throw ArgumentError("hidden sizes must be >= 1");
    if (input_dim == 0) throw ArgumentError("input_dim must be >= 1");
    if (variant != Variant::PlainRnnBaseline) {
        if (sub_sequences < 1 || sub_sequences > bands) {
            throw ArgumentError("sub_sequences must satisfy 1 <= l <= k, got l=" +
                                std::to_string(sub_sequences) + ", k=" +
                                std::to_string(bands));
        }
    }
}

std::size_t CascadeConfig::head_input_dim() const {
    switch (variant) {
        case Variant::PlainRnnBaseline: return hidden1;
        case Variant::FeatureFusion: return sub_sequences * hidden1 + hidden2;
        case Variant::Base:
        case Variant::OutputFusion: return hidden2;
    }
    throw ArgumentError("unknown variant");
}

Partition partition_bands(std::size_t k, std::size_t l) {
    if (l < 1 || l > k) {
        throw ArgumentError("partition_bands: need 1 <= l <= k, got l=" +
                            std::to_string(l) + ", k=" + std::to_string(k));
    }
    const std::size_t d = k / l;
    Partition part;
    part.ranges.reserve(l);
    for (std::size_t i = 0; i < l; ++i) {
        const std::size_t begin = i * d;
        const std::size_t end = (i + 1 == l) ? k : begin + d;
        part.ranges.push_back({begin, end});
    }
    return part;
}

CascadeModel::CascadeModel(CascadeConfig cfg, Rng& rng) : config(cfg) {
    config.validate();
    const bool plain = config.variant == Variant::PlainRnnBaseline;
    if (plain) {
        // One GRU over all k bands; l is ignored.
        partition.ranges = {{0, config.bands}};
        first_layer = GruParams(config.input_dim, config.hidden1);
        first_layer.init(rng);
        main_head = OutputHead(config.classes, config.hidden1);
        main_head.init(rng);
        return;
    }
    partition = partition_bands(config.bands, config.sub_sequences);
    first_layer = GruParams(config.input_dim, config.hidden1);
    first_layer.init(rng);
    second_layer = GruParams(config.hidden1, config.hidden2);
    second_layer.init(rng);
    if (has_fusion_weights()) {
        // Initialized to 1 so the initial FeatureFusion forward equals an
        // unweighted concatenation; unconstrained reals thereafter.
        fusion_first.reserve(config.sub_sequences);
        for (std::size_t i = 0; i < config.sub_sequences; ++i) {
            fusion_first.push_back(Param::scalar(1.0));
        }
        fusion_second = Param::scalar(1.0);
    }
    main_head = OutputHead(config.classes, config.head_input_dim());
    main_head.init(rng);
    if (config.variant == Variant::OutputFusion) {
        aux_heads.reserve(config.sub_sequences);
        for (std::size_t i = 0; i < config.sub_sequences; ++i) {
            aux_heads.emplace_back(config.classes, config.hidden1);
            aux_heads.back().init(rng);
        }
    }
}

ParamRefs CascadeModel::params() {
    ParamRefs out = first_layer.params();
    if (has_second_layer()) {
        for (Param* p : second_layer.params()) out.push_back(p);
    }
    if (has_fusion_weights()) {
        for (Param& p : fusion_first) out.push_back(&p);
        out.push_back(&fusion_second);
    }
    for (Param* p : main_head.params()) out.push_back(p);
    for (OutputHead& h : aux_heads) {
        for (Param* p : h.params()) out.push_back(p);
    }
    return out;
}

NamedParamRefs CascadeModel::named_params() {
    NamedParamRefs out = first_layer.named_params("first");
    if (has_second_layer()) {
        for (auto& np : second_layer.named_params("second")) out.push_back(np);
    }
    if (has_fusion_weights()) {
        for (std::size_t i = 0; i < fusion_first.size(); ++i) {
            out.emplace_back("fusion.first." + std::to_string(i), &fusion_first[i]);
        }
        out.emplace_back("fusion.second", &fusion_second);
    }
    for (auto& np : main_head.named_params("head")) out.push_back(np);
    for (std::size_t i = 0; i < aux_heads.size(); ++i) {
        for (auto& np : aux_heads[i].named_params("aux." + std::to_string(i))) {
            out.push_back(np);
        }
    }
    return out;
}

void CascadeModel::zero_grads() { casrnn::zero_grads(params()); }

namespace {

std::vector<Tensor> slice(const std::vector<Tensor>& x, const BandRange& r) {
    return std::vector<Tensor>(x.begin() + static_cast<std::ptrdiff_t>(r.begin),
                               x.begin() + static_cast<std::ptrdiff_t>(r.end));
}

void check_input(const CascadeModel& m, const std::vector<Tensor>& x) {
    if (x.size() != m.config.bands) {
        throw ShapeError("cascade_forward: expected " + std::to_string(m.config.bands) +
                         " input vectors, got " + std::to_string(x.size()));
    }
    for (const Tensor& v : x) {
        if (v.rank() != 1 || v.dim(0) != m.config.input_dim) {
            throw ShapeError("cascade_forward: input vector " + v.shape_str() +
                             " vs input_dim " + std::to_string(m.config.input_dim));
        }
    }
}

}  // namespace

Tensor cascade_forward(const CascadeModel& m, const std::vector<Tensor>& x,
                       CascadeCache& cache) {
    check_input(m, x);
    const std::size_t l = m.partition.ranges.size();
    cache.first.assign(l, {});
    cache.features1.assign(l, {});

    const Tensor h1_zero({m.config.hidden1});
    for (std::size_t i = 0; i < l; ++i) {
        cache.features1[i] = gru_forward(m.first_layer, slice(x, m.partition.ranges[i]),
                                         h1_zero, cache.first[i]);
    }

    if (m.config.variant == Variant::PlainRnnBaseline) {
        cache.logits = head_forward(m.main_head, cache.features1[0]);
        return cache.logits;
    }

    const Tensor h2_zero({m.config.hidden2});
    cache.features2 =
        gru_forward(m.second_layer, cache.features1, h2_zero, cache.second);

    if (m.config.variant == Variant::FeatureFusion) {
        const std::size_t h1 = m.config.hidden1;
        const std::size_t h2 = m.config.hidden2;
        Tensor fused({l * h1 + h2});
        for (std::size_t i = 0; i < l; ++i) {
            const double w = m.fusion_first[i].value[0];
            for (std::size_t j = 0; j < h1; ++j) fused[i * h1 + j] = w * cache.features1[i][j];
        }
        const double w2 = m.fusion_second.value[0];
        for (std::size_t j = 0; j < h2; ++j) fused[l * h1 + j] = w2 * cache.features2[j];
        cache.fused = std::move(fused);
        cache.logits = head_forward(m.main_head, cache.fused);
    } else {
        cache.logits = head_forward(m.main_head, cache.features2);
    }
    return cache.logits;
}

double cascade_loss(const CascadeModel& m, const Tensor& logits,
                    const std::vector<Tensor>& features1, std::size_t label) {
    if (m.config.variant != Variant::OutputFusion) {
        return cross_entropy_loss(logits, label);
    }
    if (m.aux_heads.size() != m.config.sub_sequences) {
        throw StateError("cascade_loss: OutputFusion model is missing aux heads");
    }
    if (features1.size() != m.config.sub_sequences) {
        throw ShapeError("cascade_loss: expected " + std::to_string(m.config.sub_sequences) +
                         " first-layer features, got " + std::to_string(features1.size()));
    }
    const std::size_t l = m.config.sub_sequences;
    double aux_sum = 0.0;
    for (std::size_t i = 0; i < l; ++i) {
        const double loss_i = cross_entropy_loss(head_forward(m.aux_heads[i], features1[i]), label);
        aux_sum += m.fusion_first[i].value[0] * loss_i;
    }
    const double main_loss = cross_entropy_loss(logits, label);
    return aux_sum / static_cast<double>(l) + m.fusion_second.value[0] * main_loss;
}

double cascade_backward(CascadeModel& m, const CascadeCache& cache, std::size_t label,
                        std::vector<Tensor>* d_inputs) {
    const std::size_t l = m.partition.ranges.size();
    if (cache.first.size() != l || cache.features1.size() != l) {
        throw StateError("cascade_backward: cache does not match the model partition");
    }
    if (d_inputs) d_inputs->assign(m.config.bands, {});

    if (m.config.variant == Variant::PlainRnnBaseline) {
        auto [loss, d_logits] = cross_entropy(cache.logits, label);
        Tensor d_f = head_backward(m.main_head, cache.features1[0], d_logits);
        std::vector<Tensor> dx = gru_backward(m.first_layer, cache.first[0], d_f);
        if (d_inputs) *d_inputs = std::move(dx);
        return loss;
    }

    const std::size_t h1 = m.config.hidden1;
    const std::size_t h2 = m.config.hidden2;
    std::vector<Tensor> d_features1(l, Tensor({h1}));
    Tensor d_features2({h2});
    double total_loss = 0.0;

    switch (m.config.variant) {
        case Variant::Base: {
            auto [loss, d_logits] = cross_entropy(cache.logits, label);
            d_features2 = head_backward(m.main_head, cache.features2, d_logits);
            total_loss = loss;
            break;
        }
        case Variant::FeatureFusion: {
            auto [loss, d_logits] = cross_entropy(cache.logits, label);
            Tensor d_fused = head_backward(m.main_head, cache.fused, d_logits);
            for (std::size_t i = 0; i < l; ++i) {
                const double w = m.fusion_first[i].value[0];
                double dw = 0.0;
                for (std::size_t j = 0; j < h1; ++j) {
                    const double g = d_fused[i * h1 + j];
                    d_features1[i][j] = w * g;
                    dw += cache.features1[i][j] * g;
                }
                m.fusion_first[i].grad[0] += dw;
            }
            const double w2 = m.fusion_second.value[0];
            double dw2 = 0.0;
            for (std::size_t j = 0; j < h2; ++j) {
                const double g = d_fused[l * h1 + j];
                d_features2[j] = w2 * g;
                dw2 += cache.features2[j] * g;
            }
            m.fusion_second.grad[0] += dw2;
            total_loss = loss;
            break;
        }
        case Variant::OutputFusion: {
            if (m.aux_heads.size() != l) {
                throw StateError("cascade_backward: OutputFusion model is missing aux heads");
            }
            const double inv_l = 1.0 / static_cast<double>(l);
            double aux_sum = 0.0;
            for (std::size_t i = 0; i < l; ++i) {
                Tensor aux_logits = head_forward(m.aux_heads[i], cache.features1[i]);
                auto [loss_i, d_logits_i] = cross_entropy(aux_logits, label);
                const double w = m.fusion_first[i].value[0];
                aux_sum += w * loss_i;
                m.fusion_first[i].grad[0] += loss_i * inv_l;
                for (double& g : d_logits_i.data) g *= w * inv_l;
                d_features1[i] =
                    head_backward(m.aux_heads[i], cache.features1[i], d_logits_i);
            }
            auto [main_loss, d_logits] = cross_entropy(cache.logits, label);
            m.fusion_second.grad[0] += main_loss;
            const double w2 = m.fusion_second.value[0];
            for (double& g : d_logits.data) g *= w2;
            d_features2 = head_backward(m.main_head, cache.features2, d_logits);
            total_loss = aux_sum * inv_l + w2 * main_loss;
            break;
        }
        case Variant::PlainRnnBaseline: break;  // handled above
    }

    // Second layer: its input gradients flow into each F_i^(1).
    std::vector<Tensor> d_second_inputs =
        gru_backward(m.second_layer, cache.second, d_features2);
    for (std::size_t i = 0; i < l; ++i) {
        for (std::size_t j = 0; j < h1; ++j) d_features1[i][j] += d_second_inputs[i][j];
    }

    // Shared first layer: gradients accumulate across all l sub-sequences.
    for (std::size_t i = 0; i < l; ++i) {
        std::vector<Tensor> dx = gru_backward(m.first_layer, cache.first[i], d_features1[i]);
        if (d_inputs) {
            const std::size_t begin = m.partition.ranges[i].begin;
            for (std::size_t t = 0; t < dx.size(); ++t) {
                (*d_inputs)[begin + t] = std::move(dx[t]);
            }
        }
    }
    return total_loss;
}

std::size_t argmax(const Tensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = i;
    }
    return best;
}

std::size_t predict(const CascadeModel& m, const std::vector<Tensor>& x) {
    CascadeCache cache;
    return argmax(cascade_forward(m, x, cache));
}

TrainLog train_cascade(CascadeModel& m, const SgdConfig& cfg,
                       const std::vector<Sample>& train) {
    cfg.validate();
    if (train.empty()) throw ArgumentError("train_cascade: empty train set");
    for (const Sample& s : train) {
        if (s.label >= m.config.classes) {
            throw ArgumentError("train_cascade: label " + std::to_string(s.label) +
                                " out of range for C=" + std::to_string(m.config.classes));
        }
    }

    const std::size_t n = train.size();
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Rng base(cfg.seed);

    TrainLog log;
    log.reserve(static_cast<std::size_t>(cfg.epochs));
    CascadeCache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = base.child(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            m.zero_grads();
            for (std::size_t i = 0; i < count; ++i) {
                const Sample& s = train[order[start + i]];
                cascade_forward(m, s.sequence, cache);
                if (argmax(cache.logits) == s.label) ++correct;
                loss_sum += cascade_backward(m, cache, s.label);
            }
            scale_grads(m.params(), 1.0 / static_cast<double>(count));
            sgd_step(m.params(), cfg);
        }
        log.push_back({epoch, '-', loss_sum / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(n)});
    }
    return log;
}

}  // namespace casrnn
