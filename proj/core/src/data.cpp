#include "casrnn/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "casrnn/errors.hpp"
#include "casrnn/rng.hpp"

namespace casrnn {

Tensor HsiCube::spectrum(std::size_t r, std::size_t c) const {
    Tensor s({bands});
    const double* base = &values.data[(r * cols + c) * bands];
    std::copy(base, base + bands, s.data.begin());
    return s;
}

std::size_t GroundTruth::num_classes() const {
    std::uint16_t c = 0;
    for (std::uint16_t v : labels) c = std::max(c, v);
    return c;
}

std::size_t SplitSpec::count(SplitRole role) const {
    std::size_t n = 0;
    for (const SplitEntry& e : entries) {
        if (e.role == role) ++n;
    }
    return n;
}

namespace {

class ByteWriter {
  public:
    explicit ByteWriter(const std::string& path)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("cannot open '" + path + "' for writing");
    }

    void u16(std::uint16_t v) {
        const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                    static_cast<unsigned char>(v >> 8)};
        raw(b, 2);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        raw(b, 4);
    }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        raw(b, 8);
    }
    void magic(const char m[4]) { raw(reinterpret_cast<const unsigned char*>(m), 4); }

    void finish() {
        out_.flush();
        if (!out_) throw Error("write to '" + path_ + "' failed");
    }

  private:
    void raw(const unsigned char* p, std::size_t n) {
        out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    }

    std::string path_;
    std::ofstream out_;
};

class ByteReader {
  public:
    explicit ByteReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw ArgumentError("cannot open '" + path + "' for reading");
    }

    std::size_t offset() const { return offset_; }

    void expect_magic(const char* expected) {
        char m[4];
        read(m, 4, std::string("magic '") + expected + "'");
        if (std::memcmp(m, expected, 4) != 0) {
            throw FormatError(std::string("bad magic, expected \"") + expected + "\"", 0);
        }
    }

    std::uint16_t u16() {
        unsigned char b[2];
        read(b, 2, "u16 field");
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4, "u32 field");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() {
        unsigned char b[8];
        read(b, 8, "f64 value");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(v);
    }

    void expect_eof(const std::string& what) {
        char c;
        if (in_.read(&c, 1)) {
            throw FormatError("trailing bytes after " + what, offset_);
        }
    }

  private:
    void read(void* dst, std::size_t n, const std::string& what) {
        if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            throw FormatError("truncated file while reading " + what, offset_);
        }
        offset_ += n;
    }

    std::ifstream in_;
    std::size_t offset_ = 0;
};

// Guards m*n*k against overflow before any allocation.
std::size_t checked_volume(std::uint32_t m, std::uint32_t n, std::uint32_t k,
                           std::size_t offset) {
    if (m == 0 || n == 0 || k == 0) {
        throw FormatError("zero dimension in header", offset);
    }
    const std::uint64_t mn = static_cast<std::uint64_t>(m) * n;
    if (k != 0 && mn > UINT64_MAX / k) throw FormatError("dimension overflow", offset);
    const std::uint64_t total = mn * k;
    // 2^40 doubles is far beyond anything this library targets.
    if (total > (1ULL << 40)) throw FormatError("dimension overflow", offset);
    return static_cast<std::size_t>(total);
}

}  // namespace

void save_cube(const HsiCube& cube, const std::string& path) {
    ByteWriter w(path);
    w.magic("HSC1");
    w.u16(1);
    w.u16(0);
    w.u32(static_cast<std::uint32_t>(cube.rows));
    w.u32(static_cast<std::uint32_t>(cube.cols));
    w.u32(static_cast<std::uint32_t>(cube.bands));
    for (double v : cube.values.data) w.f64(v);
    w.finish();
}

HsiCube load_cube(const std::string& path) {
    ByteReader r(path);
    r.expect_magic("HSC1");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported HSC1 version " + std::to_string(version), 4);
    r.u16();  // reserved
    const std::uint32_t m = r.u32();
    const std::uint32_t n = r.u32();
    const std::uint32_t k = r.u32();
    const std::size_t total = checked_volume(m, n, k, r.offset());

    HsiCube cube(m, n, k);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t at = r.offset();
        const double v = r.f64();
        if (!std::isfinite(v)) throw FormatError("non-finite value in payload", at);
        cube.values.data[i] = v;
    }
    r.expect_eof("HSC1 payload");
    return cube;
}

void save_labels(const GroundTruth& gt, const std::string& path) {
    ByteWriter w(path);
    w.magic("HSL1");
    w.u16(1);
    w.u16(0);
    w.u32(static_cast<std::uint32_t>(gt.rows));
    w.u32(static_cast<std::uint32_t>(gt.cols));
    for (std::uint16_t v : gt.labels) w.u16(v);
    w.finish();
}

GroundTruth load_labels(const std::string& path) {
    ByteReader r(path);
    r.expect_magic("HSL1");
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError("unsupported HSL1 version " + std::to_string(version), 4);
    r.u16();  // reserved
    const std::uint32_t m = r.u32();
    const std::uint32_t n = r.u32();
    checked_volume(m, n, 1, r.offset());
    GroundTruth gt(m, n);
    for (std::size_t i = 0; i < gt.labels.size(); ++i) gt.labels[i] = r.u16();
    r.expect_eof("HSL1 payload");
    return gt;
}

void save_split(const SplitSpec& split, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "row,col,class,role\n";
    for (const SplitEntry& e : split.entries) {
        out << e.row << ',' << e.col << ',' << e.cls << ','
            << (e.role == SplitRole::Train ? "train" : "test") << '\n';
    }
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

SplitSpec load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != "row,col,class,role") {
        throw Error("split file '" + path + "': missing 'row,col,class,role' header");
    }
    SplitSpec split;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(row, field[i], i < 3 ? ',' : '\n')) {
                throw Error("split file '" + path + "': malformed line " +
                            std::to_string(line_no));
            }
        }
        SplitEntry e;
        try {
            e.row = std::stoul(field[0]);
            e.col = std::stoul(field[1]);
            e.cls = static_cast<std::uint16_t>(std::stoul(field[2]));
        } catch (const std::exception&) {
            throw Error("split file '" + path + "': bad number on line " +
                        std::to_string(line_no));
        }
        if (field[3] == "train") {
            e.role = SplitRole::Train;
        } else if (field[3] == "test") {
            e.role = SplitRole::Test;
        } else {
            throw Error("split file '" + path + "': bad role '" + field[3] + "' on line " +
                        std::to_string(line_no));
        }
        split.entries.push_back(e);
    }
    return split;
}

BandExtrema band_extrema(const HsiCube& cube) {
    BandExtrema e;
    e.min.assign(cube.bands, std::numeric_limits<double>::infinity());
    e.max.assign(cube.bands, -std::numeric_limits<double>::infinity());
    const std::size_t pixels = cube.rows * cube.cols;
    for (std::size_t p = 0; p < pixels; ++p) {
        const double* v = &cube.values.data[p * cube.bands];
        for (std::size_t b = 0; b < cube.bands; ++b) {
            e.min[b] = std::min(e.min[b], v[b]);
            e.max[b] = std::max(e.max[b], v[b]);
        }
    }
    return e;
}

BandExtrema band_extrema(const HsiCube& cube, const std::vector<SplitEntry>& pixels) {
    if (pixels.empty()) throw ArgumentError("band_extrema: empty pixel set");
    BandExtrema e;
    e.min.assign(cube.bands, std::numeric_limits<double>::infinity());
    e.max.assign(cube.bands, -std::numeric_limits<double>::infinity());
    for (const SplitEntry& px : pixels) {
        const double* v = &cube.values.data[(px.row * cube.cols + px.col) * cube.bands];
        for (std::size_t b = 0; b < cube.bands; ++b) {
            e.min[b] = std::min(e.min[b], v[b]);
            e.max[b] = std::max(e.max[b], v[b]);
        }
    }
    return e;
}

HsiCube normalize(const HsiCube& cube, const BandExtrema& extrema) {
    if (extrema.min.size() != cube.bands || extrema.max.size() != cube.bands) {
        throw ShapeError("normalize: extrema for " + std::to_string(extrema.min.size()) +
                         " bands vs cube with " + std::to_string(cube.bands));
    }
    HsiCube out = cube;
    const std::size_t pixels = cube.rows * cube.cols;
    for (std::size_t b = 0; b < cube.bands; ++b) {
        const double lo = extrema.min[b];
        const double range = extrema.max[b] - lo;
        if (range <= 0.0) {
            for (std::size_t p = 0; p < pixels; ++p) out.values.data[p * cube.bands + b] = 0.0;
        } else {
            for (std::size_t p = 0; p < pixels; ++p) {
                double& v = out.values.data[p * cube.bands + b];
                v = (v - lo) / range;
            }
        }
    }
    return out;
}

HsiCube normalize(const HsiCube& cube) { return normalize(cube, band_extrema(cube)); }

SplitSpec build_split(const GroundTruth& gt, const std::vector<std::size_t>& per_class_train,
                      std::uint64_t seed) {
    return build_split(gt, per_class_train, {}, seed);
}

SplitSpec build_split(const GroundTruth& gt, const std::vector<std::size_t>& per_class_train,
                      const std::vector<std::size_t>& per_class_test, std::uint64_t seed) {
    const std::size_t classes = gt.num_classes();
    if (classes == 0) throw ArgumentError("build_split: ground truth has no labeled pixels");
    if (per_class_train.size() != classes) {
        throw ArgumentError("build_split: got " + std::to_string(per_class_train.size()) +
                            " train counts for " + std::to_string(classes) + " classes");
    }
    if (!per_class_test.empty() && per_class_test.size() != classes) {
        throw ArgumentError("build_split: got " + std::to_string(per_class_test.size()) +
                            " test counts for " + std::to_string(classes) + " classes");
    }

    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_class(classes);
    for (std::size_t r = 0; r < gt.rows; ++r) {
        for (std::size_t c = 0; c < gt.cols; ++c) {
            const std::uint16_t cls = gt.at(r, c);
            if (cls > 0) by_class[cls - 1].emplace_back(r, c);
        }
    }

    SplitSpec split;
    split.seed = seed;
    const Rng base(seed);
    for (std::size_t ci = 0; ci < classes; ++ci) {
        auto& pixels = by_class[ci];
        const std::size_t want = per_class_train[ci];
        if (pixels.size() < want) {
            throw ArgumentError("build_split: class " + std::to_string(ci + 1) + " has " +
                                std::to_string(pixels.size()) + " labeled pixels, need " +
                                std::to_string(want) + " for training");
        }
        Rng rng = base.child(ci + 1);
        rng.shuffle(pixels);
        std::size_t test_count = pixels.size() - want;
        if (!per_class_test.empty() && per_class_test[ci] > 0) {
            test_count = std::min(test_count, per_class_test[ci]);
        }
        for (std::size_t i = 0; i < want + test_count; ++i) {
            split.entries.push_back({pixels[i].first, pixels[i].second,
                                     static_cast<std::uint16_t>(ci + 1),
                                     i < want ? SplitRole::Train : SplitRole::Test});
        }
    }
    std::sort(split.entries.begin(), split.entries.end(),
              [](const SplitEntry& a, const SplitEntry& b) {
                  if (a.role != b.role) return a.role == SplitRole::Train;
                  if (a.cls != b.cls) return a.cls < b.cls;
                  if (a.row != b.row) return a.row < b.row;
                  return a.col < b.col;
              });
    return split;
}

SynthData synth_hsi(const SynthSpec& spec) {
    if (spec.classes < 2) throw ArgumentError("synth_hsi: need at least 2 classes");
    if (spec.bands < spec.classes) throw ArgumentError("synth_hsi: need bands >= classes");
    if (spec.rows == 0 || spec.cols == 0) throw ArgumentError("synth_hsi: empty image");
    if (spec.redundancy < 1) throw ArgumentError("synth_hsi: redundancy must be >= 1");

    const std::size_t groups = (spec.bands + spec.redundancy - 1) / spec.redundancy;
    const double two_pi = 6.283185307179586476925286766559;

    // Smooth per-class mean spectrum over the group axis: a low-frequency
    // sinusoid mixture plus a class-specific bump so each class has its own
    // discriminative band region.
    const Rng base(spec.seed);
    std::vector<std::vector<double>> class_mean(spec.classes,
                                                std::vector<double>(groups, 0.0));
    for (std::size_t c = 0; c < spec.classes; ++c) {
        Rng rng = base.child(100 + c);
        const double phase1 = rng.uniform(0.0, two_pi);
        const double phase2 = rng.uniform(0.0, two_pi);
        const double amp1 = rng.uniform(0.10, 0.20);
        const double amp2 = rng.uniform(0.05, 0.12);
        const double bump_center =
            (static_cast<double>(c) + 0.5) * static_cast<double>(groups) /
            static_cast<double>(spec.classes);
        const double bump_width =
            std::max(0.75, static_cast<double>(groups) / (2.5 * static_cast<double>(spec.classes)));
        for (std::size_t j = 0; j < groups; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(groups);
            const double z = (static_cast<double>(j) - bump_center) / bump_width;
            class_mean[c][j] = 0.5 + amp1 * std::sin(two_pi * t + phase1) +
                               amp2 * std::sin(2.0 * two_pi * t + phase2) +
                               0.35 * std::exp(-0.5 * z * z);
        }
    }

    // Class-specific spatial modulation frequencies (used when texture_amp > 0).
    std::vector<std::pair<double, double>> tex_freq(spec.classes);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        tex_freq[c] = {1.0 + static_cast<double>(c % 3), 1.0 + static_cast<double>((c / 3) % 3)};
    }

    SynthData out;
    out.cube = HsiCube(spec.rows, spec.cols, spec.bands);
    out.gt = GroundTruth(spec.rows, spec.cols);

    // Contiguous horizontal class strips; the last strip absorbs remainder rows.
    const std::size_t strip = std::max<std::size_t>(1, spec.rows / spec.classes);

    Rng noise_rng = base.child(7);
    std::vector<double> anchors(groups);
    for (std::size_t r = 0; r < spec.rows; ++r) {
        const std::size_t cls = std::min(r / strip, spec.classes - 1);
        for (std::size_t c = 0; c < spec.cols; ++c) {
            out.gt.at(r, c) = static_cast<std::uint16_t>(cls + 1);
            double tex = 1.0;
            if (spec.texture_amp != 0.0) {
                const auto [fr, fc] = tex_freq[cls];
                tex = 1.0 + spec.texture_amp *
                                std::sin(two_pi * (fr * static_cast<double>(r) +
                                                   fc * static_cast<double>(c)) / 8.0);
            }
            for (std::size_t j = 0; j < groups; ++j) {
                anchors[j] = class_mean[cls][j] * tex + spec.noise * noise_rng.gaussian();
            }
            for (std::size_t b = 0; b < spec.bands; ++b) {
                out.cube.at(r, c, b) =
                    anchors[b / spec.redundancy] + 0.15 * spec.noise * noise_rng.gaussian();
            }
        }
    }
    return out;
}

}  // namespace casrnn
