#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "casrnn/data.hpp"
#include "casrnn/errors.hpp"
#include "casrnn/rng.hpp"

using namespace casrnn;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

HsiCube sample_cube() {
    HsiCube cube(2, 2, 3);
    Rng rng(5);
    for (double& v : cube.values.data) v = rng.uniform(-10.0, 10.0);
    return cube;
}

// Ground truth with the given per-class pixel populations, laid out row-major.
GroundTruth gt_with_populations(std::size_t rows, std::size_t cols,
                                const std::vector<std::size_t>& populations) {
    GroundTruth gt(rows, cols);
    std::size_t idx = 0;
    for (std::size_t c = 0; c < populations.size(); ++c) {
        for (std::size_t i = 0; i < populations[c]; ++i) {
            REQUIRE(idx < rows * cols);
            gt.labels[idx++] = static_cast<std::uint16_t>(c + 1);
        }
    }
    return gt;
}

}  // namespace

TEST_CASE("cube round trip is bit identical and 2x2x3 is 116 bytes") {
    const std::string path = temp_path("casrnn_cube_rt.hsc1");
    HsiCube cube = sample_cube();
    save_cube(cube, path);

    // 4 magic + 2 version + 2 reserved + 3*4 dims = 20 header bytes, then
    // 12 f64 values
    CHECK(read_bytes(path).size() == 20 + 12 * 8);

    HsiCube loaded = load_cube(path);
    CHECK(loaded.rows == 2);
    CHECK(loaded.cols == 2);
    CHECK(loaded.bands == 3);
    CHECK(loaded.values.data == cube.values.data);

    const std::string path2 = temp_path("casrnn_cube_rt2.hsc1");
    save_cube(loaded, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("wrong magic names the expected HSC1") {
    const std::string path = temp_path("casrnn_badmagic.hsc1");
    std::vector<char> bytes = (save_cube(sample_cube(), path), read_bytes(path));
    bytes[0] = 'X';
    write_bytes(path, bytes);
    try {
        load_cube(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("HSC1") != std::string::npos);
        CHECK(e.offset == 0);
    }
}

TEST_CASE("every truncation of a valid cube fails with a positioned error") {
    const std::string full_path = temp_path("casrnn_trunc.hsc1");
    save_cube(sample_cube(), full_path);
    const std::vector<char> bytes = read_bytes(full_path);
    const std::string cut_path = temp_path("casrnn_trunc_cut.hsc1");

    for (std::size_t len = 0; len < bytes.size(); ++len) {
        write_bytes(cut_path, std::vector<char>(bytes.begin(), bytes.begin() + len));
        try {
            load_cube(cut_path);
            FAIL("truncation at ", len, " parsed successfully");
        } catch (const FormatError& e) {
            CHECK(e.offset <= len);
        }
    }
}

TEST_CASE("trailing bytes are rejected") {
    const std::string path = temp_path("casrnn_trailing.hsc1");
    save_cube(sample_cube(), path);
    std::vector<char> bytes = read_bytes(path);
    bytes.push_back(0);
    write_bytes(path, bytes);
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("non-finite payload values are rejected") {
    const std::string path = temp_path("casrnn_nan.hsc1");
    HsiCube cube = sample_cube();
    cube.values.data[5] = std::numeric_limits<double>::quiet_NaN();
    save_cube(cube, path);
    CHECK_THROWS_AS(load_cube(path), FormatError);
}

TEST_CASE("label round trip and format checks") {
    const std::string path = temp_path("casrnn_labels.hsl1");
    GroundTruth gt(3, 2);
    gt.at(0, 0) = 2;
    gt.at(1, 1) = 7;
    gt.at(2, 0) = 1;
    save_labels(gt, path);
    CHECK(read_bytes(path).size() == 16 + 6 * 2);

    GroundTruth loaded = load_labels(path);
    CHECK(loaded.labels == gt.labels);
    CHECK(loaded.num_classes() == 7);

    std::vector<char> bytes = read_bytes(path);
    bytes[1] = 'X';
    write_bytes(path, bytes);
    try {
        load_labels(path);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("HSL1") != std::string::npos);
    }
}

TEST_CASE("split csv round trip") {
    SplitSpec split;
    split.entries = {{0, 1, 2, SplitRole::Train}, {3, 4, 1, SplitRole::Test}};
    const std::string path = temp_path("casrnn_split.csv");
    save_split(split, path);
    SplitSpec loaded = load_split(path);
    REQUIRE(loaded.entries.size() == 2);
    CHECK(loaded.entries[0] == split.entries[0]);
    CHECK(loaded.entries[1] == split.entries[1]);

    std::ofstream bad(path, std::ios::trunc);
    bad << "row,col,class,role\n1,2,3,nonsense\n";
    bad.close();
    CHECK_THROWS_AS(load_split(path), Error);
}

TEST_CASE("normalization maps band extrema to [0,1]") {
    HsiCube cube(1, 2, 2);
    cube.at(0, 0, 0) = 2.0;
    cube.at(0, 1, 0) = 4.0;
    cube.at(0, 0, 1) = 5.0;  // constant band
    cube.at(0, 1, 1) = 5.0;
    HsiCube norm = normalize(cube);
    CHECK(norm.at(0, 0, 0) == 0.0);
    CHECK(norm.at(0, 1, 0) == 1.0);
    CHECK(norm.at(0, 0, 1) == 0.0);
    CHECK(norm.at(0, 1, 1) == 0.0);

    // idempotence, bit-exact
    HsiCube twice = normalize(norm);
    CHECK(twice.values.data == norm.values.data);
}

TEST_CASE("normalization bounds on random cubes") {
    Rng rng(17);
    HsiCube cube(6, 5, 4);
    for (double& v : cube.values.data) v = rng.uniform(-100.0, 100.0);
    HsiCube norm = normalize(cube);
    BandExtrema e = band_extrema(norm);
    for (std::size_t b = 0; b < 4; ++b) {
        CHECK(e.min[b] == 0.0);
        CHECK(e.max[b] == 1.0);
    }
    CHECK(norm.values.all_finite());
}

TEST_CASE("indian-pines-style split counts: 695 train, 9671 test") {
    const std::vector<std::size_t> populations = {1434, 834, 234, 497,  747, 489,
                                                  968,  2468, 614, 212, 1294, 380,
                                                  95,   54,   26,  20};
    GroundTruth gt = gt_with_populations(145, 145, populations);
    std::vector<std::size_t> train(13, 50);
    train.insert(train.end(), {15, 15, 15});
    SplitSpec split = build_split(gt, train, 1234);
    CHECK(split.count(SplitRole::Train) == 695);
    CHECK(split.count(SplitRole::Test) == 9671);
}

TEST_CASE("pavia-style split counts: 3921 train, 42776 test") {
    const std::vector<std::size_t> populations = {7179, 19189, 2491, 3588, 1610,
                                                  5561, 1705,  4196, 1178};
    GroundTruth gt = gt_with_populations(610, 340, populations);
    const std::vector<std::size_t> train = {548, 540, 392, 524, 265, 532, 375, 514, 231};
    SplitSpec split = build_split(gt, train, 99);
    CHECK(split.count(SplitRole::Train) == 3921);
    CHECK(split.count(SplitRole::Test) == 42776);
}

TEST_CASE("split partitions the labeled pixels exactly") {
    Rng rng(3);
    GroundTruth gt(20, 20);
    for (std::uint16_t& v : gt.labels) {
        v = static_cast<std::uint16_t>(rng.uniform_index(4));  // 0..3, 0 = unlabeled
    }
    const std::vector<std::size_t> train = {10, 20, 5};
    SplitSpec split = build_split(gt, train, 777);

    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<std::size_t> train_counts(3, 0), total_counts(3, 0);
    for (const SplitEntry& e : split.entries) {
        CHECK(gt.at(e.row, e.col) == e.cls);
        CHECK(seen.emplace(e.row, e.col).second);  // no duplicates
        ++total_counts[e.cls - 1];
        if (e.role == SplitRole::Train) ++train_counts[e.cls - 1];
    }
    for (std::size_t c = 0; c < 3; ++c) CHECK(train_counts[c] == train[c]);

    std::size_t labeled = 0;
    for (std::uint16_t v : gt.labels) labeled += v > 0 ? 1 : 0;
    CHECK(split.entries.size() == labeled);  // train + test cover everything
}

TEST_CASE("same seed gives the same split, different seed varies") {
    GroundTruth gt = gt_with_populations(10, 10, {40, 40});
    SplitSpec a = build_split(gt, {5, 5}, 42);
    SplitSpec b = build_split(gt, {5, 5}, 42);
    CHECK(a.entries == b.entries);
    SplitSpec c = build_split(gt, {5, 5}, 43);
    CHECK(a.entries != c.entries);
}

TEST_CASE("insufficient class pixels name the class") {
    GroundTruth gt = gt_with_populations(4, 4, {10, 3});
    try {
        build_split(gt, {5, 5}, 1);
        FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("class 2") != std::string::npos);
    }
}

TEST_CASE("per-class test caps") {
    GroundTruth gt = gt_with_populations(10, 10, {50, 50});
    SplitSpec split = build_split(gt, {10, 10}, {20, 0}, 5);
    std::size_t test1 = 0, test2 = 0;
    for (const SplitEntry& e : split.entries) {
        if (e.role == SplitRole::Test) (e.cls == 1 ? test1 : test2) += 1;
    }
    CHECK(test1 == 20);
    CHECK(test2 == 40);
}

TEST_CASE("synth shape contract and determinism") {
    SynthSpec spec;
    spec.classes = 3;
    spec.bands = 20;
    spec.rows = 16;
    spec.cols = 16;
    SynthData a = synth_hsi(spec);
    CHECK(a.cube.rows == 16);
    CHECK(a.cube.cols == 16);
    CHECK(a.cube.bands == 20);
    CHECK(a.gt.num_classes() == 3);
    CHECK(a.cube.values.all_finite());
    for (std::uint16_t v : a.gt.labels) CHECK(v >= 1);

    SynthData b = synth_hsi(spec);
    CHECK(a.cube.values.data == b.cube.values.data);
    CHECK(a.gt.labels == b.gt.labels);
}

TEST_CASE("zero noise makes all pixels of a class identical") {
    SynthSpec spec;
    spec.classes = 3;
    spec.bands = 12;
    spec.rows = 9;
    spec.cols = 7;
    spec.noise = 0.0;
    SynthData d = synth_hsi(spec);
    for (std::size_t cls = 1; cls <= 3; ++cls) {
        Tensor reference;
        for (std::size_t r = 0; r < d.gt.rows; ++r) {
            for (std::size_t c = 0; c < d.gt.cols; ++c) {
                if (d.gt.at(r, c) != cls) continue;
                Tensor s = d.cube.spectrum(r, c);
                if (reference.size() == 0) {
                    reference = s;
                } else {
                    CHECK(s.data == reference.data);
                }
            }
        }
    }
}

TEST_CASE("bands within a redundancy group correlate more than across groups") {
    SynthSpec spec;
    spec.classes = 4;
    spec.bands = 24;
    spec.rows = 24;
    spec.cols = 20;
    spec.redundancy = 4;
    SynthData d = synth_hsi(spec);

    const std::size_t pixels = spec.rows * spec.cols;
    auto band_values = [&](std::size_t b) {
        std::vector<double> v(pixels);
        for (std::size_t p = 0; p < pixels; ++p) v[p] = d.cube.values.data[p * spec.bands + b];
        return v;
    };
    auto pearson = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            mx += x[i];
            my += y[i];
        }
        mx /= static_cast<double>(x.size());
        my /= static_cast<double>(y.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        return sxy / std::sqrt(sxx * syy);
    };

    double same = 0, cross = 0;
    std::size_t same_n = 0, cross_n = 0;
    for (std::size_t b1 = 0; b1 < spec.bands; ++b1) {
        for (std::size_t b2 = b1 + 1; b2 < spec.bands; ++b2) {
            const double r = pearson(band_values(b1), band_values(b2));
            if (b1 / spec.redundancy == b2 / spec.redundancy) {
                same += r;
                ++same_n;
            } else {
                cross += r;
                ++cross_n;
            }
        }
    }
    CHECK(same / static_cast<double>(same_n) > cross / static_cast<double>(cross_n));
}

TEST_CASE("synth argument validation") {
    SynthSpec spec;
    spec.classes = 1;
    CHECK_THROWS_AS(synth_hsi(spec), ArgumentError);
    spec.classes = 5;
    spec.bands = 3;
    CHECK_THROWS_AS(synth_hsi(spec), ArgumentError);
}
