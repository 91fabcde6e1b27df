#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace casrnn {

// Flat configuration shared by every command. Keys in the config file and
// command-line flags carry exactly these names; defaults mirror the reference
// experiment protocol (lr 0.001, batch 64, 300 epochs, Indian-Pines-style
// l=10 / hidden1=128 / hidden2=256).
struct RunConfig {
    // dataset files
    std::string cube;
    std::string labels;
    std::string split;
    std::string checkpoint;
    std::string out = ".";
    std::string preset;  // "", "indian-pines", "pavia-university"

    // model
    std::string variant = "cas";  // rnn | cas | cas-f | cas-o | sscas
    int l = 10;
    int hidden1 = 128;
    int hidden2 = 256;

    // optimizer
    double lr = 0.001;
    int batch = 64;
    int epochs = 300;
    std::uint64_t seed = 1;

    // spatial variant only
    int patch = 27;
    std::string conv_stack = "4x32,5x64,4x128";
    std::string activation = "tanh";
    int stage_a = 100;
    int stage_b = 100;
    int stage_c = 100;

    // preprocessing / execution
    std::string normalize = "full";  // full | train
    int threads = 1;

    // synth command
    int synth_classes = 5;
    int synth_bands = 40;
    int synth_rows = 55;
    int synth_cols = 50;
    int synth_redundancy = 4;
    double synth_noise = 0.05;
    double synth_texture = 0.0;
    std::string train_per_class = "50";  // single count or comma list
    std::string test_per_class = "0";    // 0 = all remaining

    // sweep command: comma lists; empty = the single configured value
    std::string sweep_l;
    std::string sweep_hidden1;
    std::string sweep_hidden2;

    // Keys the user set explicitly (config file or flag). Serialization emits
    // exactly these; presets only fill fields the user left alone.
    std::set<std::string> set_keys;

    // Value equality; set_keys is bookkeeping and not compared.
    bool operator==(const RunConfig& other) const;
};

// All recognized keys, in canonical serialization order.
const std::vector<std::string>& config_keys();

// Assign one key; throws ConfigError naming the key if unknown or malformed.
void config_set(RunConfig& cfg, const std::string& key, const std::string& value);

std::string config_get(const RunConfig& cfg, const std::string& key);

// "key = value" lines, '#' comments. parse(serialize(c)) == c.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

// --config FILE first (if given), then --key value / --key=value overrides.
RunConfig parse_args(const std::vector<std::string>& args);

// Fills preset-controlled fields the user did not set explicitly.
void apply_preset(RunConfig& cfg);

// Command-aware validation: required files, ranges, and variant/field
// mismatches (spatial-only keys on a spectral variant are errors).
void validate_config(const RunConfig& cfg, const std::string& command);

// Commands. Each throws on failure; ConfigError means a bad configuration.
void run_synth(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_eval(const RunConfig& cfg);
void run_map(const RunConfig& cfg);
void run_sweep(const RunConfig& cfg);

// Dispatch by command name; applies preset and validates first.
void run_command(const std::string& command, RunConfig cfg);

}  // namespace casrnn
