#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "casrnn/cascade.hpp"
#include "casrnn/data.hpp"
#include "casrnn/layers.hpp"

namespace casrnn {

struct ConvSpec {
    std::size_t kernel = 0;
    std::size_t channels = 0;
    bool operator==(const ConvSpec&) const = default;
};

// Three conv layers, 2x2 max-pool after the first two, a nonlinearity after
// every conv. The patch size must trace to a 1x1 spatial output; the default
// 27x27 stack runs 27 -> 24 -> 12 -> 8 -> 4 -> 1.
struct SpatialConfig {
    std::size_t patch = 27;  // omega, odd
    std::vector<ConvSpec> conv = {{4, 32}, {5, 64}, {4, 128}};
    Activation activation = Activation::Tanh;

    std::size_t feature_dim() const { return conv.back().channels; }

    // Spatial sizes [patch, conv1, pool1, conv2, pool2, conv3]; throws
    // ShapeError if any stage is impossible or the trace does not end at 1.
    std::vector<std::size_t> shape_trace() const;

    void validate() const;
};

// One conv stack applied to every band matrix; a single parameter set
// regardless of the number of bands.
struct BandCnn {
    SpatialConfig config;
    std::vector<ConvLayer> layers;  // exactly 3

    BandCnn() = default;
    BandCnn(SpatialConfig cfg, Rng& rng);

    ParamRefs params();
    NamedParamRefs named_params(const std::string& prefix);
    void zero_grads();
};

struct BandCnnCache {
    Tensor input;                 // [1 x w x w]
    Tensor act1, pooled1;         // after conv1+act, after pool1
    Tensor act2, pooled2;
    Tensor act3;                  // [F x 1 x 1]
    PoolCache pool1, pool2;
};

// band image [1 x w x w] -> feature vector [F].
Tensor band_cnn_forward(const BandCnn& net, const Tensor& band_image, BandCnnCache& cache);
Tensor band_cnn_forward(const BandCnn& net, const Tensor& band_image);

// Accumulates conv grads; returns d(loss)/d(band image).
Tensor band_cnn_backward(BandCnn& net, const BandCnnCache& cache, const Tensor& d_feature);

// w x w window of one band centered at (row, col); out-of-image positions are
// mirror-reflected (edge not duplicated). w must be odd.
Tensor extract_band_window(const HsiCube& cube, std::size_t row, std::size_t col,
                           std::size_t band, std::size_t window);

// Full w x w x k patch centered at (row, col).
Tensor extract_patch(const HsiCube& cube, std::size_t row, std::size_t col,
                     std::size_t window);

// The per-band feature sequence s_1..s_k for one pixel's patch.
std::vector<Tensor> band_features(const BandCnn& net, const Tensor& patch);

// A labeled pixel position; label is 0-based.
struct PixelSample {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t label = 0;
};

// The full spectral-spatial model plus its staged-training bookkeeping.
// stage: 0 = fresh, 1 = conv pretrained, 2 = cascade trained (conv frozen),
// 3 = jointly fine-tuned.
struct SsCascadeModel {
    BandCnn band_cnn;
    CascadeModel cascade;        // input_dim == band_cnn feature_dim
    OutputHead pretrain_head;    // stage-A only
    int stage = 0;

    SsCascadeModel(const SpatialConfig& spatial, CascadeConfig cascade_cfg, Rng& rng);

    ParamRefs params();          // conv + cascade (pretrain head excluded)
    NamedParamRefs named_params();
};

struct StageSchedule {
    int pretrain_epochs = 100;  // A
    int rnn_epochs = 100;       // B
    int finetune_epochs = 100;  // C
};

// Stage-A sample space: each of the N pixels contributes one sample per
// band, every band matrix inheriting its pixel's label. N*k entries in
// (pixel-major, band-minor) order.
struct StageASample {
    std::size_t pixel = 0;
    std::size_t band = 0;
};

std::vector<StageASample> stage_a_samples(std::size_t n_pixels, std::size_t bands);

// Stage A: trains the conv stack + pretrain head on the N*k per-band sample
// set. The cascade is untouched.
TrainLog pretrain_conv(SsCascadeModel& m, const HsiCube& cube,
                       const std::vector<PixelSample>& train, const SgdConfig& cfg);

// Stage B: conv weights frozen; feature sequences are computed once and the
// cascade is trained on them. Requires stage A first.
TrainLog train_rnn_frozen(SsCascadeModel& m, const HsiCube& cube,
                          const std::vector<PixelSample>& train, const SgdConfig& cfg);

// Stage C: joint fine-tune of conv + cascade. Requires stage B first.
TrainLog finetune(SsCascadeModel& m, const HsiCube& cube,
                  const std::vector<PixelSample>& train, const SgdConfig& cfg);

// A then B then C; epochs per stage from the schedule (0 skips a stage but
// still advances the stage marker). Log entries carry 'A'/'B'/'C'.
TrainLog train_sscas(SsCascadeModel& m, const HsiCube& cube,
                     const std::vector<PixelSample>& train, const StageSchedule& schedule,
                     const SgdConfig& base_cfg);

std::size_t predict_pixel(const SsCascadeModel& m, const HsiCube& cube, std::size_t row,
                          std::size_t col);

}  // namespace casrnn
