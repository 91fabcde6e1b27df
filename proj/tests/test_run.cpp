#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "casrnn/data.hpp"
#include "casrnn/errors.hpp"
#include "casrnn/metrics.hpp"
#include "casrnn/run.hpp"

using namespace casrnn;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("casrnn_run_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

double kv_value(const std::string& kv, const std::string& key) {
    const std::size_t at = kv.find(key + "=");
    REQUIRE(at != std::string::npos);
    return std::stod(kv.substr(at + key.size() + 1));
}

}  // namespace

TEST_CASE("config round trip: parse(serialize(c)) == c") {
    RunConfig cfg;
    config_set(cfg, "variant", "cas-o");
    config_set(cfg, "epochs", "42");
    config_set(cfg, "lr", "0.0125");
    config_set(cfg, "cube", "/data/foo.hsc1");
    config_set(cfg, "seed", "987654321");
    config_set(cfg, "train_per_class", "50,50,15");

    RunConfig round = parse_config_text(serialize_config(cfg));
    CHECK(round == cfg);

    // a default config serializes to nothing and round trips too
    RunConfig empty;
    CHECK(serialize_config(empty).empty());
    CHECK(parse_config_text("") == empty);
}

TEST_CASE("every key round trips through serialize/parse") {
    RunConfig cfg;
    int i = 0;
    for (const std::string& key : config_keys()) {
        // exercise string and numeric keys alike with distinct values
        if (key == "variant") config_set(cfg, key, "sscas");
        else if (key == "preset") config_set(cfg, key, "indian-pines");
        else if (key == "normalize") config_set(cfg, key, "train");
        else if (key == "activation") config_set(cfg, key, "sigmoid");
        else if (key == "conv_stack") config_set(cfg, key, "2x8,3x12,1x16");
        else if (key == "lr" || key == "synth_noise" || key == "synth_texture")
            config_set(cfg, key, "0.125");
        else if (key == "cube" || key == "labels" || key == "split" ||
                 key == "checkpoint" || key == "out")
            config_set(cfg, key, "/tmp/p" + std::to_string(i));
        else if (key == "train_per_class" || key == "test_per_class" || key == "sweep_l" ||
                 key == "sweep_hidden1" || key == "sweep_hidden2")
            config_set(cfg, key, "1,2,3");
        else config_set(cfg, key, std::to_string(3 + i));
        ++i;
    }
    CHECK(parse_config_text(serialize_config(cfg)) == cfg);
}

TEST_CASE("config parse errors carry the key or line") {
    CHECK_THROWS_AS(parse_config_text("nonsense = 1"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("epochs = abc"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just a line"), ConfigError);
    try {
        parse_config_text("bogus_key = 7");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }

    // comments and blank lines are fine
    RunConfig cfg = parse_config_text("# comment\n\nepochs = 7 # trailing\n");
    CHECK(cfg.epochs == 7);
}

TEST_CASE("flags: --key value, --key=value, and --config overrides") {
    const std::string dir = fresh_dir("flags");
    const std::string cfg_path = dir + "/run.conf";
    std::ofstream(cfg_path) << "epochs = 100\nvariant = cas-f\n";

    RunConfig cfg = parse_args({"--config", cfg_path, "--epochs", "5", "--hidden1=32"});
    CHECK(cfg.epochs == 5);       // flag beats file
    CHECK(cfg.variant == "cas-f");  // file survives
    CHECK(cfg.hidden1 == 32);

    CHECK_THROWS_AS(parse_args({"--epochs"}), ConfigError);
    CHECK_THROWS_AS(parse_args({"epochs", "5"}), ConfigError);
    CHECK_THROWS_AS(parse_args({"--epochs", "5", "--config", cfg_path}), ConfigError);
}

TEST_CASE("presets fill unset fields only") {
    RunConfig cfg;
    config_set(cfg, "preset", "indian-pines");
    apply_preset(cfg);
    CHECK(cfg.l == 10);
    CHECK(cfg.hidden1 == 128);
    CHECK(cfg.hidden2 == 256);
    CHECK(cfg.train_per_class == "50,50,50,50,50,50,50,50,50,50,50,50,50,15,15,15");

    RunConfig with_override;
    config_set(with_override, "preset", "pavia-university");
    config_set(with_override, "hidden2", "64");
    apply_preset(with_override);
    CHECK(with_override.l == 8);
    CHECK(with_override.hidden1 == 256);
    CHECK(with_override.hidden2 == 64);  // explicit value wins

    RunConfig pavia_sscas;
    config_set(pavia_sscas, "preset", "pavia-university");
    config_set(pavia_sscas, "variant", "sscas");
    apply_preset(pavia_sscas);
    CHECK(pavia_sscas.l == 4);
    CHECK(pavia_sscas.hidden1 == 256);
    CHECK(pavia_sscas.hidden2 == 256);

    RunConfig bad;
    config_set(bad, "preset", "unknown-place");
    CHECK_THROWS_AS(apply_preset(bad), ConfigError);
}

TEST_CASE("variant/field mismatches are validation errors") {
    RunConfig cfg;
    config_set(cfg, "variant", "cas");
    config_set(cfg, "patch", "27");
    config_set(cfg, "cube", "a");
    config_set(cfg, "labels", "b");
    config_set(cfg, "split", "c");
    try {
        validate_config(cfg, "train");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("patch") != std::string::npos);
    }

    RunConfig stage;
    config_set(stage, "variant", "rnn");
    config_set(stage, "stage_a", "10");
    CHECK_THROWS_AS(validate_config(stage, "map"), ConfigError);

    RunConfig bad_variant;
    config_set(bad_variant, "variant", "lstm");
    CHECK_THROWS_AS(validate_config(bad_variant, "synth"), ArgumentError);

    RunConfig missing;
    config_set(missing, "variant", "cas");
    CHECK_THROWS_AS(validate_config(missing, "train"), ConfigError);

    RunConfig sscas_ok;
    config_set(sscas_ok, "variant", "sscas");
    config_set(sscas_ok, "patch", "9");
    config_set(sscas_ok, "conv_stack", "2x8,3x12,1x16");
    CHECK_NOTHROW(validate_config(sscas_ok, "synth"));

    RunConfig even_patch;
    config_set(even_patch, "variant", "sscas");
    config_set(even_patch, "patch", "8");
    CHECK_THROWS_AS(validate_config(even_patch, "synth"), ConfigError);
}

TEST_CASE("synth -> train -> eval -> map pipeline emits all artifacts") {
    const std::string dir = fresh_dir("pipeline");
    RunConfig synth;
    config_set(synth, "out", dir);
    config_set(synth, "synth_classes", "3");
    config_set(synth, "synth_bands", "12");
    config_set(synth, "synth_rows", "12");
    config_set(synth, "synth_cols", "10");
    config_set(synth, "train_per_class", "6");
    config_set(synth, "seed", "3");
    run_command("synth", synth);
    CHECK(fs::exists(dir + "/cube.hsc1"));
    CHECK(fs::exists(dir + "/labels.hsl1"));
    CHECK(fs::exists(dir + "/split.csv"));

    RunConfig train = synth;
    config_set(train, "cube", dir + "/cube.hsc1");
    config_set(train, "labels", dir + "/labels.hsl1");
    config_set(train, "split", dir + "/split.csv");
    config_set(train, "variant", "cas");
    config_set(train, "l", "3");
    config_set(train, "hidden1", "6");
    config_set(train, "hidden2", "6");
    config_set(train, "epochs", "8");
    config_set(train, "lr", "0.05");
    run_command("train", train);
    CHECK(fs::exists(dir + "/model.crnw"));
    CHECK(fs::exists(dir + "/train_log.csv"));
    const std::string log = read_text(dir + "/train_log.csv");
    CHECK(log.rfind("epoch,stage,mean_loss,train_oa\n", 0) == 0);

    RunConfig eval = train;
    config_set(eval, "checkpoint", dir + "/model.crnw");
    run_command("eval", eval);
    CHECK(fs::exists(dir + "/metrics.txt"));
    CHECK(fs::exists(dir + "/metrics.kv"));
    const std::string kv = read_text(dir + "/metrics.kv");
    CHECK(kv_value(kv, "oa") >= 0.0);
    CHECK(kv_value(kv, "oa") <= 1.0);

    run_command("map", eval);
    CHECK(fs::exists(dir + "/map.ppm"));
    const std::string ppm = read_text(dir + "/map.ppm");
    CHECK(ppm.rfind("P6\n10 12\n255\n", 0) == 0);
}

TEST_CASE("threaded eval matches single-threaded eval byte for byte") {
    const std::string dir = fresh_dir("threads");
    RunConfig synth;
    config_set(synth, "out", dir);
    config_set(synth, "synth_classes", "3");
    config_set(synth, "synth_bands", "10");
    config_set(synth, "synth_rows", "15");
    config_set(synth, "synth_cols", "10");
    config_set(synth, "train_per_class", "5");
    run_command("synth", synth);

    RunConfig train = synth;
    config_set(train, "cube", dir + "/cube.hsc1");
    config_set(train, "labels", dir + "/labels.hsl1");
    config_set(train, "split", dir + "/split.csv");
    config_set(train, "variant", "cas");
    config_set(train, "l", "2");
    config_set(train, "hidden1", "4");
    config_set(train, "hidden2", "4");
    config_set(train, "epochs", "4");
    run_command("train", train);

    RunConfig eval = train;
    config_set(eval, "checkpoint", dir + "/model.crnw");
    run_command("eval", eval);
    const std::string single = read_text(dir + "/metrics.kv");

    config_set(eval, "threads", "3");
    run_command("eval", eval);
    CHECK(read_text(dir + "/metrics.kv") == single);
}

TEST_CASE("untrained model scores chance-level accuracy on balanced classes") {
    double oa_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::string dir = fresh_dir("chance" + std::to_string(seed));
        RunConfig synth;
        config_set(synth, "out", dir);
        config_set(synth, "synth_classes", "4");
        config_set(synth, "synth_bands", "8");
        config_set(synth, "synth_rows", "16");  // 4-row strips: exactly balanced
        config_set(synth, "synth_cols", "16");
        config_set(synth, "train_per_class", "4");
        config_set(synth, "seed", std::to_string(seed));
        run_command("synth", synth);

        RunConfig train = synth;
        config_set(train, "cube", dir + "/cube.hsc1");
        config_set(train, "labels", dir + "/labels.hsl1");
        config_set(train, "split", dir + "/split.csv");
        config_set(train, "variant", "cas");
        config_set(train, "l", "2");
        config_set(train, "hidden1", "4");
        config_set(train, "hidden2", "4");
        config_set(train, "epochs", "0");  // untrained: initialization only
        run_command("train", train);

        RunConfig eval = train;
        config_set(eval, "checkpoint", dir + "/model.crnw");
        run_command("eval", eval);
        oa_sum += kv_value(read_text(dir + "/metrics.kv"), "oa");
    }
    const double mean_oa = oa_sum / 5.0;
    CHECK(mean_oa == doctest::Approx(0.25).epsilon(0.6));  // 1/C +- 0.15
    CHECK(std::abs(mean_oa - 0.25) <= 0.15);
}

TEST_CASE("sweep over l in {2,4} emits exactly two data rows") {
    const std::string dir = fresh_dir("sweep");
    RunConfig synth;
    config_set(synth, "out", dir);
    config_set(synth, "synth_classes", "3");
    config_set(synth, "synth_bands", "8");
    config_set(synth, "synth_rows", "12");
    config_set(synth, "synth_cols", "8");
    config_set(synth, "train_per_class", "4");
    run_command("synth", synth);

    RunConfig sweep = synth;
    config_set(sweep, "cube", dir + "/cube.hsc1");
    config_set(sweep, "labels", dir + "/labels.hsl1");
    config_set(sweep, "split", dir + "/split.csv");
    config_set(sweep, "variant", "cas");
    config_set(sweep, "hidden1", "4");
    config_set(sweep, "hidden2", "4");
    config_set(sweep, "epochs", "2");
    config_set(sweep, "sweep_l", "2,4");
    run_command("sweep", sweep);

    const std::string csv = read_text(dir + "/sweep.csv");
    CHECK(csv.rfind("l,hidden1,hidden2,oa,aa,kappa,seconds\n", 0) == 0);
    std::size_t rows = 0;
    for (char c : csv) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 3);  // header + 2 grid points
    CHECK(csv.find("\n2,4,4,") != std::string::npos);
    CHECK(csv.find("\n4,4,4,") != std::string::npos);
}

#ifdef CASRNN_CLI_PATH
TEST_CASE("cli exit codes: 0 success, 2 config error, 1 runtime error") {
    const std::string cli = CASRNN_CLI_PATH;
    const std::string dir = fresh_dir("exitcodes");
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(run("synth --out " + dir + " --synth_classes 3 --synth_bands 8 --synth_rows 9"
              " --synth_cols 8 --train_per_class 3") == 0);
    CHECK(run("synth --bogus_key 1") == 2);
    CHECK(run("frobnicate") == 2);
    // missing file at runtime
    CHECK(run("eval --checkpoint " + dir + "/missing.crnw --cube " + dir +
              "/cube.hsc1 --split " + dir + "/split.csv --out " + dir) == 1);
}
#endif
