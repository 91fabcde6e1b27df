#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "casrnn/gru.hpp"
#include "casrnn/layers.hpp"
#include "casrnn/param.hpp"
#include "casrnn/rng.hpp"
#include "casrnn/tensor.hpp"

namespace casrnn {

enum class Variant {
    Base,              // two-layer cascade, loss on the main head only
    FeatureFusion,     // weighted concatenation of first- and second-layer features
    OutputFusion,      // weighted sum of per-sub-sequence and main losses
    PlainRnnBaseline,  // single GRU over the whole band sequence
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct CascadeConfig {
    std::size_t bands = 0;          // k
    std::size_t sub_sequences = 1;  // l
    std::size_t hidden1 = 16;       // H1
    std::size_t hidden2 = 16;       // H2
    std::size_t classes = 2;        // C
    std::size_t input_dim = 1;      // 1 in spectral mode, CNN feature width in spatial mode
    Variant variant = Variant::Base;

    void validate() const;

    // Width of the main head's input for this variant.
    std::size_t head_input_dim() const;
};

// Contiguous, ordered, disjoint band index ranges covering [0, k).
// Half-open and zero-based; the first l-1 ranges have length floor(k/l) and
// the last absorbs the remainder.
struct BandRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - begin; }
    bool operator==(const BandRange&) const = default;
};

struct Partition {
    std::vector<BandRange> ranges;
};

Partition partition_bands(std::size_t k, std::size_t l);

// The cascaded model. Exactly one first-layer parameter set exists no matter
// how many sub-sequences there are; every sub-sequence is folded with it.
struct CascadeModel {
    CascadeConfig config;
    Partition partition;

    GruParams first_layer;               // input_dim -> H1, shared
    GruParams second_layer;              // H1 -> H2 (absent for PlainRnnBaseline)
    std::vector<Param> fusion_first;     // w_i^(1) scalars (fusion variants only)
    Param fusion_second;                 // w^(2) scalar     (fusion variants only)
    OutputHead main_head;
    std::vector<OutputHead> aux_heads;   // over H1, OutputFusion training only

    CascadeModel(CascadeConfig cfg, Rng& rng);

    bool has_second_layer() const { return config.variant != Variant::PlainRnnBaseline; }
    bool has_fusion_weights() const {
        return config.variant == Variant::FeatureFusion ||
               config.variant == Variant::OutputFusion;
    }

    ParamRefs params();
    NamedParamRefs named_params();
    void zero_grads();
};

struct CascadeCache {
    std::vector<GruSequenceCache> first;  // one per sub-sequence
    std::vector<Tensor> features1;        // F_i^(1)
    GruSequenceCache second;
    Tensor features2;                     // F^(2)
    Tensor fused;                         // weighted concatenation (FeatureFusion)
    Tensor logits;                        // main-path logits
};

// Runs the full forward pass over the k input vectors and returns the
// main-path logits. Fills `cache` for the backward pass.
Tensor cascade_forward(const CascadeModel& m, const std::vector<Tensor>& x,
                       CascadeCache& cache);

// Loss for a forward result: plain cross-entropy for Base/FeatureFusion/
// PlainRnnBaseline; the weighted multi-head sum for OutputFusion (aux logits
// are recomputed from features1). No gradients are touched.
double cascade_loss(const CascadeModel& m, const Tensor& logits,
                    const std::vector<Tensor>& features1, std::size_t label);

// Full backward pass: accumulates gradients for every parameter, including
// fusion weights, and returns the loss. `cache` must come from a matching
// cascade_forward on the same parameters. When d_inputs is non-null it
// receives d(loss)/d(x_t) for all k input vectors in band order, which is
// what the spatial fine-tune stage pushes into the conv stack.
double cascade_backward(CascadeModel& m, const CascadeCache& cache, std::size_t label,
                        std::vector<Tensor>* d_inputs = nullptr);

// Argmax over the main-path logits; aux heads are never consulted.
// Ties break toward the smallest class index.
std::size_t predict(const CascadeModel& m, const std::vector<Tensor>& x);

std::size_t argmax(const Tensor& v);

struct Sample {
    std::vector<Tensor> sequence;  // k vectors of input_dim
    std::size_t label = 0;         // 0-based class index
};

struct EpochLog {
    int epoch = 0;
    char stage = '-';  // 'A'/'B'/'C' for the staged spatial schedule
    double mean_loss = 0.0;
    double train_accuracy = 0.0;
};

using TrainLog = std::vector<EpochLog>;

// Mini-batch SGD over the sample set. Shuffles every epoch with a sub-seed
// derived from (cfg.seed, epoch); gradients are averaged over the actual
// batch size. Returns one log entry per epoch.
TrainLog train_cascade(CascadeModel& m, const SgdConfig& cfg,
                       const std::vector<Sample>& train);

}  // namespace casrnn
