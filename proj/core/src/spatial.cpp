#include "casrnn/spatial.hpp"

#include <numeric>

#include "casrnn/errors.hpp"

namespace casrnn {

std::vector<std::size_t> SpatialConfig::shape_trace() const {
    if (conv.size() != 3) {
        throw ShapeError("conv stack must have exactly 3 layers, got " +
                         std::to_string(conv.size()));
    }
    std::vector<std::size_t> trace;
    trace.push_back(patch);
    std::size_t s = patch;
    for (std::size_t i = 0; i < 3; ++i) {
        if (conv[i].kernel == 0 || conv[i].channels == 0) {
            throw ShapeError("conv layer " + std::to_string(i + 1) + " has zero kernel/channels");
        }
        if (s < conv[i].kernel) {
            throw ShapeError("conv layer " + std::to_string(i + 1) + ": input " +
                             std::to_string(s) + " smaller than kernel " +
                             std::to_string(conv[i].kernel));
        }
        s = s - conv[i].kernel + 1;
        trace.push_back(s);
        if (i < 2) {
            if (s % 2 != 0) {
                throw ShapeError("pool after conv " + std::to_string(i + 1) +
                                 ": odd input size " + std::to_string(s));
            }
            s /= 2;
            trace.push_back(s);
        }
    }
    if (s != 1) {
        throw ShapeError("conv stack leaves spatial size " + std::to_string(s) +
                         ", must reach 1");
    }
    return trace;
}

void SpatialConfig::validate() const {
    if (patch % 2 == 0) {
        throw ArgumentError("patch size must be odd (no unique center), got " +
                            std::to_string(patch));
    }
    shape_trace();
}

BandCnn::BandCnn(SpatialConfig cfg, Rng& rng) : config(cfg) {
    config.validate();
    std::size_t in_ch = 1;
    for (const ConvSpec& spec : config.conv) {
        layers.emplace_back(in_ch, spec.channels, spec.kernel, spec.kernel);
        layers.back().init(rng);
        in_ch = spec.channels;
    }
}

ParamRefs BandCnn::params() {
    ParamRefs out;
    for (ConvLayer& l : layers) {
        for (Param* p : l.params()) out.push_back(p);
    }
    return out;
}

NamedParamRefs BandCnn::named_params(const std::string& prefix) {
    NamedParamRefs out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        for (auto& np : layers[i].named_params(prefix + ".conv" + std::to_string(i + 1))) {
            out.push_back(np);
        }
    }
    return out;
}

void BandCnn::zero_grads() { casrnn::zero_grads(params()); }

Tensor band_cnn_forward(const BandCnn& net, const Tensor& band_image, BandCnnCache& cache) {
    const Activation act = net.config.activation;
    cache.input = band_image;
    cache.act1 = activation_forward(act, conv_forward(net.layers[0], band_image));
    cache.pooled1 = pool_forward(cache.act1, cache.pool1);
    cache.act2 = activation_forward(act, conv_forward(net.layers[1], cache.pooled1));
    cache.pooled2 = pool_forward(cache.act2, cache.pool2);
    cache.act3 = activation_forward(act, conv_forward(net.layers[2], cache.pooled2));
    if (cache.act3.dim(1) != 1 || cache.act3.dim(2) != 1) {
        throw ShapeError("band image does not trace to 1x1, final " + cache.act3.shape_str());
    }
    return Tensor({cache.act3.dim(0)}, cache.act3.data);
}

Tensor band_cnn_forward(const BandCnn& net, const Tensor& band_image) {
    BandCnnCache scratch;
    return band_cnn_forward(net, band_image, scratch);
}

Tensor band_cnn_backward(BandCnn& net, const BandCnnCache& cache, const Tensor& d_feature) {
    const Activation act = net.config.activation;
    const std::size_t f = cache.act3.dim(0);
    if (d_feature.size() != f) {
        throw ShapeError("band_cnn_backward: d_feature " + d_feature.shape_str() + " vs F=" +
                         std::to_string(f));
    }
    Tensor d_act3({f, 1, 1}, d_feature.data);
    Tensor d = activation_backward(act, cache.act3, d_act3);
    d = conv_backward(net.layers[2], cache.pooled2, d);
    d = pool_backward(cache.pool2, d);
    d = activation_backward(act, cache.act2, d);
    d = conv_backward(net.layers[1], cache.pooled1, d);
    d = pool_backward(cache.pool1, d);
    d = activation_backward(act, cache.act1, d);
    return conv_backward(net.layers[0], cache.input, d);
}

namespace {

// Mirror reflection without edge duplication; degenerates to clamping when
// the axis has a single element.
std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n) - 1;
    while (i < 0 || i > last) {
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
    }
    return static_cast<std::size_t>(i);
}

}  // namespace

Tensor extract_band_window(const HsiCube& cube, std::size_t row, std::size_t col,
                           std::size_t band, std::size_t window) {
    if (window % 2 == 0) {
        throw ArgumentError("window size must be odd (no unique center), got " +
                            std::to_string(window));
    }
    if (row >= cube.rows || col >= cube.cols) {
        throw ArgumentError("pixel (" + std::to_string(row) + "," + std::to_string(col) +
                            ") outside a " + std::to_string(cube.rows) + "x" +
                            std::to_string(cube.cols) + " image");
    }
    if (band >= cube.bands) {
        throw ArgumentError("band " + std::to_string(band) + " out of range");
    }
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
    Tensor out({1, window, window});
    for (std::size_t dy = 0; dy < window; ++dy) {
        const std::size_t r =
            mirror_index(static_cast<std::ptrdiff_t>(row) - half + static_cast<std::ptrdiff_t>(dy),
                         cube.rows);
        for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t c = mirror_index(
                static_cast<std::ptrdiff_t>(col) - half + static_cast<std::ptrdiff_t>(dx),
                cube.cols);
            out.at(0, dy, dx) = cube.at(r, c, band);
        }
    }
    return out;
}

Tensor extract_patch(const HsiCube& cube, std::size_t row, std::size_t col,
                     std::size_t window) {
    if (window % 2 == 0) {
        throw ArgumentError("window size must be odd (no unique center), got " +
                            std::to_string(window));
    }
    if (row >= cube.rows || col >= cube.cols) {
        throw ArgumentError("pixel (" + std::to_string(row) + "," + std::to_string(col) +
                            ") outside a " + std::to_string(cube.rows) + "x" +
                            std::to_string(cube.cols) + " image");
    }
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
    Tensor out({window, window, cube.bands});
    for (std::size_t dy = 0; dy < window; ++dy) {
        const std::size_t r =
            mirror_index(static_cast<std::ptrdiff_t>(row) - half + static_cast<std::ptrdiff_t>(dy),
                         cube.rows);
        for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t c = mirror_index(
                static_cast<std::ptrdiff_t>(col) - half + static_cast<std::ptrdiff_t>(dx),
                cube.cols);
            for (std::size_t b = 0; b < cube.bands; ++b) {
                out.at(dy, dx, b) = cube.at(r, c, b);
            }
        }
    }
    return out;
}

namespace {

// One band of an already-extracted patch as a single-channel image.
Tensor patch_band(const Tensor& patch, std::size_t band) {
    const std::size_t w = patch.dim(0);
    Tensor img({1, w, w});
    for (std::size_t y = 0; y < w; ++y) {
        for (std::size_t x = 0; x < w; ++x) img.at(0, y, x) = patch.at(y, x, band);
    }
    return img;
}

}  // namespace

std::vector<Tensor> band_features(const BandCnn& net, const Tensor& patch) {
    if (patch.rank() != 3 || patch.dim(0) != net.config.patch ||
        patch.dim(1) != net.config.patch) {
        throw ShapeError("band_features: patch " + patch.shape_str() + " vs configured " +
                         std::to_string(net.config.patch));
    }
    const std::size_t k = patch.dim(2);
    std::vector<Tensor> features;
    features.reserve(k);
    for (std::size_t b = 0; b < k; ++b) {
        features.push_back(band_cnn_forward(net, patch_band(patch, b)));
    }
    return features;
}

SsCascadeModel::SsCascadeModel(const SpatialConfig& spatial, CascadeConfig cascade_cfg,
                               Rng& rng)
    : band_cnn(spatial, rng),
      cascade((cascade_cfg.input_dim = spatial.feature_dim(), cascade_cfg), rng),
      pretrain_head(cascade_cfg.classes, spatial.feature_dim()) {
    pretrain_head.init(rng);
}

ParamRefs SsCascadeModel::params() {
    ParamRefs out = band_cnn.params();
    for (Param* p : cascade.params()) out.push_back(p);
    return out;
}

NamedParamRefs SsCascadeModel::named_params() {
    NamedParamRefs out = band_cnn.named_params("cnn");
    for (auto& np : cascade.named_params()) out.push_back(np);
    for (auto& np : pretrain_head.named_params("pretrain")) out.push_back(np);
    return out;
}

namespace {

std::uint64_t stage_seed(std::uint64_t base_seed, std::uint64_t stage) {
    Rng rng = Rng(base_seed).child(stage);
    return rng.next_u64();
}

}  // namespace

std::vector<StageASample> stage_a_samples(std::size_t n_pixels, std::size_t bands) {
    std::vector<StageASample> samples;
    samples.reserve(n_pixels * bands);
    for (std::size_t p = 0; p < n_pixels; ++p) {
        for (std::size_t b = 0; b < bands; ++b) samples.push_back({p, b});
    }
    return samples;
}

TrainLog pretrain_conv(SsCascadeModel& m, const HsiCube& cube,
                       const std::vector<PixelSample>& train, const SgdConfig& cfg) {
    if (train.empty()) throw ArgumentError("pretrain_conv: empty train set");
    const std::size_t k = cube.bands;
    const std::size_t w = m.band_cnn.config.patch;

    const std::vector<StageASample> samples = stage_a_samples(train.size(), k);
    const std::size_t n = samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    ParamRefs params = m.band_cnn.params();
    for (Param* p : m.pretrain_head.params()) params.push_back(p);

    const Rng base(cfg.seed);
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    TrainLog log;
    BandCnnCache cache;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = base.child(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            zero_grads(params);
            for (std::size_t i = 0; i < count; ++i) {
                const StageASample& sample = samples[order[start + i]];
                const PixelSample& px = train[sample.pixel];
                Tensor img = extract_band_window(cube, px.row, px.col, sample.band, w);
                Tensor feature = band_cnn_forward(m.band_cnn, img, cache);
                Tensor logits = head_forward(m.pretrain_head, feature);
                auto [loss, d_logits] = cross_entropy(logits, px.label);
                loss_sum += loss;
                if (argmax(logits) == px.label) ++correct;
                Tensor d_feature = head_backward(m.pretrain_head, feature, d_logits);
                band_cnn_backward(m.band_cnn, cache, d_feature);
            }
            scale_grads(params, 1.0 / static_cast<double>(count));
            sgd_step(params, cfg);
        }
        log.push_back({epoch, 'A', loss_sum / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(n)});
    }
    if (m.stage < 1) m.stage = 1;
    return log;
}

TrainLog train_rnn_frozen(SsCascadeModel& m, const HsiCube& cube,
                          const std::vector<PixelSample>& train, const SgdConfig& cfg) {
    if (m.stage < 1) throw StateError("stage B requires stage A (conv pretraining) first");
    if (train.empty()) throw ArgumentError("train_rnn_frozen: empty train set");

    // Conv weights are fixed for the whole stage, so each pixel's feature
    // sequence is computed once; training then only touches the cascade.
    std::vector<Sample> sequences;
    sequences.reserve(train.size());
    const std::size_t w = m.band_cnn.config.patch;
    for (const PixelSample& px : train) {
        sequences.push_back(
            {band_features(m.band_cnn, extract_patch(cube, px.row, px.col, w)), px.label});
    }
    TrainLog log = train_cascade(m.cascade, cfg, sequences);
    for (EpochLog& e : log) e.stage = 'B';
    if (m.stage < 2) m.stage = 2;
    return log;
}

TrainLog finetune(SsCascadeModel& m, const HsiCube& cube,
                  const std::vector<PixelSample>& train, const SgdConfig& cfg) {
    if (m.stage < 2) throw StateError("stage C requires stage B (frozen-conv training) first");
    if (train.empty()) throw ArgumentError("finetune: empty train set");
    cfg.validate();

    const std::size_t n = train.size();
    const std::size_t k = cube.bands;
    const std::size_t w = m.band_cnn.config.patch;
    const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    ParamRefs params = m.params();
    const Rng base(cfg.seed);
    TrainLog log;
    std::vector<BandCnnCache> cnn_caches(k);
    CascadeCache cascade_cache;
    std::vector<Tensor> d_sequence;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng = base.child(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            zero_grads(params);
            for (std::size_t i = 0; i < count; ++i) {
                const PixelSample& px = train[order[start + i]];
                std::vector<Tensor> sequence(k);
                for (std::size_t b = 0; b < k; ++b) {
                    sequence[b] = band_cnn_forward(
                        m.band_cnn, extract_band_window(cube, px.row, px.col, b, w),
                        cnn_caches[b]);
                }
                cascade_forward(m.cascade, sequence, cascade_cache);
                if (argmax(cascade_cache.logits) == px.label) ++correct;
                loss_sum += cascade_backward(m.cascade, cascade_cache, px.label, &d_sequence);
                for (std::size_t b = 0; b < k; ++b) {
                    band_cnn_backward(m.band_cnn, cnn_caches[b], d_sequence[b]);
                }
            }
            scale_grads(params, 1.0 / static_cast<double>(count));
            sgd_step(params, cfg);
        }
        log.push_back({epoch, 'C', loss_sum / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(n)});
    }
    if (m.stage < 3) m.stage = 3;
    return log;
}

TrainLog train_sscas(SsCascadeModel& m, const HsiCube& cube,
                     const std::vector<PixelSample>& train, const StageSchedule& schedule,
                     const SgdConfig& base_cfg) {
    if (schedule.pretrain_epochs < 0 || schedule.rnn_epochs < 0 ||
        schedule.finetune_epochs < 0) {
        throw ArgumentError("stage epochs must be non-negative");
    }
    TrainLog log;
    SgdConfig cfg = base_cfg;

    cfg.epochs = schedule.pretrain_epochs;
    cfg.seed = stage_seed(base_cfg.seed, 1);
    if (cfg.epochs > 0) {
        TrainLog stage = pretrain_conv(m, cube, train, cfg);
        log.insert(log.end(), stage.begin(), stage.end());
    } else if (m.stage < 1) {
        m.stage = 1;
    }

    cfg.epochs = schedule.rnn_epochs;
    cfg.seed = stage_seed(base_cfg.seed, 2);
    if (cfg.epochs > 0) {
        TrainLog stage = train_rnn_frozen(m, cube, train, cfg);
        log.insert(log.end(), stage.begin(), stage.end());
    } else if (m.stage < 2) {
        m.stage = 2;
    }

    cfg.epochs = schedule.finetune_epochs;
    cfg.seed = stage_seed(base_cfg.seed, 3);
    if (cfg.epochs > 0) {
        TrainLog stage = finetune(m, cube, train, cfg);
        log.insert(log.end(), stage.begin(), stage.end());
    } else if (m.stage < 3) {
        m.stage = 3;
    }
    return log;
}

std::size_t predict_pixel(const SsCascadeModel& m, const HsiCube& cube, std::size_t row,
                          std::size_t col) {
    return predict(m.cascade,
                   band_features(m.band_cnn, extract_patch(cube, row, col,
                                                           m.band_cnn.config.patch)));
}

}  // namespace casrnn
