#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "casrnn/tensor.hpp"

namespace casrnn {

// A hyperspectral cube: m rows x n cols x k bands, pixel-major with the k
// band values contiguous per pixel (the HSC1 on-disk layout).
struct HsiCube {
    std::size_t rows = 0;   // m
    std::size_t cols = 0;   // n
    std::size_t bands = 0;  // k
    Tensor values;          // shape {m, n, k}

    HsiCube() = default;
    HsiCube(std::size_t m, std::size_t n, std::size_t k)
        : rows(m), cols(n), bands(k), values({m, n, k}) {}

    double at(std::size_t r, std::size_t c, std::size_t b) const {
        return values.at(r, c, b);
    }
    double& at(std::size_t r, std::size_t c, std::size_t b) { return values.at(r, c, b); }

    // One pixel's spectrum as a k-vector.
    Tensor spectrum(std::size_t r, std::size_t c) const;
};

// Per-pixel labels; 0 = unlabeled, 1..C = classes.
struct GroundTruth {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint16_t> labels;  // row-major

    GroundTruth() = default;
    GroundTruth(std::size_t m, std::size_t n) : rows(m), cols(n), labels(m * n, 0) {}

    std::uint16_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
    std::uint16_t& at(std::size_t r, std::size_t c) { return labels[r * cols + c]; }

    // C = max label.
    std::size_t num_classes() const;
};

enum class SplitRole { Train, Test };

struct SplitEntry {
    std::size_t row = 0;
    std::size_t col = 0;
    std::uint16_t cls = 0;  // 1..C
    SplitRole role = SplitRole::Train;

    bool operator==(const SplitEntry&) const = default;
};

struct SplitSpec {
    std::vector<SplitEntry> entries;
    std::uint64_t seed = 0;

    std::size_t count(SplitRole role) const;
};

// HSC1 / HSL1 binary formats: little-endian, bit-exact round trip.
void save_cube(const HsiCube& cube, const std::string& path);
HsiCube load_cube(const std::string& path);
void save_labels(const GroundTruth& gt, const std::string& path);
GroundTruth load_labels(const std::string& path);

// Split CSV: header "row,col,class,role"; role in {train,test}.
void save_split(const SplitSpec& split, const std::string& path);
SplitSpec load_split(const std::string& path);

// Per-band min/max over the whole cube, or over a pixel subset.
struct BandExtrema {
    std::vector<double> min;
    std::vector<double> max;
};

BandExtrema band_extrema(const HsiCube& cube);
BandExtrema band_extrema(const HsiCube& cube, const std::vector<SplitEntry>& pixels);

// Per band b: v <- (v - min_b) / (max_b - min_b). Constant bands map to 0.
HsiCube normalize(const HsiCube& cube, const BandExtrema& extrema);
HsiCube normalize(const HsiCube& cube);

// Per class, a seeded uniform draw without replacement of the requested train
// pixels; all remaining labeled pixels become test. per_class_train[c-1] is
// the count for class c. Throws ArgumentError naming the class if a class has
// too few labeled pixels.
SplitSpec build_split(const GroundTruth& gt, const std::vector<std::size_t>& per_class_train,
                      std::uint64_t seed);

// Same, optionally capping the per-class test count (0 = keep all remaining).
SplitSpec build_split(const GroundTruth& gt, const std::vector<std::size_t>& per_class_train,
                      const std::vector<std::size_t>& per_class_test, std::uint64_t seed);

// Synthetic HSI with adjacent-band redundancy: each class has a smooth mean
// spectrum; bands come in groups of width `redundancy` that repeat the
// group's anchor value up to small within-group noise; classes occupy
// contiguous row strips so spatial patches are informative. texture_amp > 0
// additionally modulates each class with a class-specific spatial pattern.
struct SynthSpec {
    std::size_t classes = 3;
    std::size_t bands = 20;
    std::size_t rows = 16;
    std::size_t cols = 16;
    std::size_t redundancy = 4;
    double noise = 0.05;
    double texture_amp = 0.0;
    std::uint64_t seed = 1;
};

struct SynthData {
    HsiCube cube;
    GroundTruth gt;
};

SynthData synth_hsi(const SynthSpec& spec);

}  // namespace casrnn
