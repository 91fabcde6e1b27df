#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>
#include <filesystem>
#include <fstream>

#include "casrnn/checkpoint.hpp"
#include "casrnn/errors.hpp"
#include "testutil.hpp"

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

}  // namespace

TEST_CASE("manifest round trip is bit exact") {
    Rng rng(3);
    TensorManifest manifest;
    manifest.emplace_back("alpha", testutil::random_tensor({3, 4}, rng, -1e6, 1e6));
    manifest.emplace_back("beta.gamma", testutil::random_tensor({7}, rng));
    manifest.emplace_back("weird -0", Tensor({1}, {-0.0}));
    manifest.emplace_back("tiny", Tensor({1}, {5e-324}));  // denormal

    const std::string path = temp_path("casrnn_ckpt.crnw");
    save_checkpoint(manifest, path);
    TensorManifest loaded = load_checkpoint(path);

    REQUIRE(loaded.size() == manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        CHECK(loaded[i].first == manifest[i].first);
        CHECK(loaded[i].second.shape == manifest[i].second.shape);
        // bit-level comparison, not value comparison
        for (std::size_t j = 0; j < manifest[i].second.size(); ++j) {
            CHECK(std::bit_cast<std::uint64_t>(loaded[i].second.data[j]) ==
                  std::bit_cast<std::uint64_t>(manifest[i].second.data[j]));
        }
    }

    const std::string path2 = temp_path("casrnn_ckpt2.crnw");
    save_checkpoint(loaded, path2);
    CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("bad magic and truncations fail with positioned errors") {
    TensorManifest manifest;
    manifest.emplace_back("x", Tensor({2, 2}, {1, 2, 3, 4}));
    const std::string path = temp_path("casrnn_ckpt_bad.crnw");
    save_checkpoint(manifest, path);
    std::vector<char> bytes = read_bytes(path);

    {
        std::vector<char> bad = bytes;
        bad[0] = 'X';
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(bad.data(), static_cast<std::streamsize>(bad.size()));
        try {
            load_checkpoint(path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("CRNW") != std::string::npos);
            CHECK(e.offset == 0);
        }
    }

    for (std::size_t len = 0; len < bytes.size(); ++len) {
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(bytes.data(), static_cast<std::streamsize>(len));
        try {
            load_checkpoint(path);
            FAIL("truncation at ", len, " parsed successfully");
        } catch (const FormatError& e) {
            CHECK(e.offset <= len);
        }
    }
}

TEST_CASE("cascade models round trip through their checkpoint") {
    for (Variant v : {Variant::Base, Variant::FeatureFusion, Variant::OutputFusion,
                      Variant::PlainRnnBaseline}) {
        Rng rng(10 + static_cast<int>(v));
        CascadeConfig cfg;
        cfg.bands = 8;
        cfg.sub_sequences = 3;
        cfg.hidden1 = 3;
        cfg.hidden2 = 2;
        cfg.classes = 4;
        cfg.variant = v;
        CascadeModel model(cfg, rng);

        const std::string path = temp_path("casrnn_model.crnw");
        save_model(model, path);
        CHECK_FALSE(checkpoint_is_spatial(path));
        CascadeModel loaded = load_cascade_model(path);

        CHECK(loaded.config.variant == v);
        CHECK(loaded.config.bands == cfg.bands);
        CHECK(loaded.config.sub_sequences == cfg.sub_sequences);
        CHECK(params_hash(loaded.params()) == params_hash(model.params()));

        // identical predictions on random inputs
        Rng data_rng(77);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<Tensor> x;
            for (std::size_t b = 0; b < cfg.bands; ++b) {
                x.push_back(testutil::random_tensor({1}, data_rng));
            }
            CHECK(predict(model, x) == predict(loaded, x));
        }

        CHECK_THROWS_AS(load_sscas_model(path), StateError);
    }
}

TEST_CASE("spatial models round trip with their stage marker") {
    Rng rng(31);
    SpatialConfig sp;
    sp.patch = 9;
    sp.conv = {{2, 2}, {3, 3}, {1, 4}};
    sp.activation = Activation::Sigmoid;
    CascadeConfig cc;
    cc.bands = 5;
    cc.sub_sequences = 2;
    cc.hidden1 = 3;
    cc.hidden2 = 3;
    cc.classes = 2;
    cc.variant = Variant::FeatureFusion;
    SsCascadeModel model(sp, cc, rng);
    model.stage = 2;

    const std::string path = temp_path("casrnn_spatial.crnw");
    save_model(model, path);
    CHECK(checkpoint_is_spatial(path));
    SsCascadeModel loaded = load_sscas_model(path);

    CHECK(loaded.stage == 2);
    CHECK(loaded.band_cnn.config.patch == 9);
    CHECK(loaded.band_cnn.config.activation == Activation::Sigmoid);
    CHECK(loaded.band_cnn.config.conv == sp.conv);
    CHECK(loaded.cascade.config.variant == Variant::FeatureFusion);
    CHECK(params_hash(loaded.params()) == params_hash(model.params()));
    CHECK(params_hash(loaded.pretrain_head.params()) ==
          params_hash(model.pretrain_head.params()));

    CHECK_THROWS_AS(load_cascade_model(path), StateError);
}

TEST_CASE("missing tensors are reported by name") {
    Rng rng(5);
    CascadeConfig cfg;
    cfg.bands = 4;
    cfg.sub_sequences = 2;
    cfg.hidden1 = 2;
    cfg.hidden2 = 2;
    cfg.classes = 2;
    CascadeModel model(cfg, rng);
    const std::string path = temp_path("casrnn_missing.crnw");
    save_model(model, path);

    TensorManifest manifest = load_checkpoint(path);
    manifest.erase(manifest.end() - 1);  // drop head.bias
    save_checkpoint(manifest, path);
    try {
        load_cascade_model(path);
        FAIL("expected StateError");
    } catch (const StateError& e) {
        CHECK(std::string(e.what()).find("head.bias") != std::string::npos);
    }
}
