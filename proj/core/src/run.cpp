#include "casrnn/run.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include "casrnn/checkpoint.hpp"
#include "casrnn/data.hpp"
#include "casrnn/errors.hpp"
#include "casrnn/metrics.hpp"
#include "casrnn/spatial.hpp"

namespace casrnn {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected integer, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected unsigned integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected number, got '" + value + "'");
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream stream(s);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "cube",          "labels",       "split",         "checkpoint",
        "out",           "preset",       "variant",       "l",
        "hidden1",       "hidden2",      "lr",            "batch",
        "epochs",        "seed",         "patch",         "conv_stack",
        "activation",    "stage_a",      "stage_b",       "stage_c",
        "normalize",     "threads",      "synth_classes", "synth_bands",
        "synth_rows",    "synth_cols",   "synth_redundancy", "synth_noise",
        "synth_texture", "train_per_class", "test_per_class", "sweep_l",
        "sweep_hidden1", "sweep_hidden2",
    };
    return keys;
}

void config_set(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "cube") cfg.cube = value;
    else if (key == "labels") cfg.labels = value;
    else if (key == "split") cfg.split = value;
    else if (key == "checkpoint") cfg.checkpoint = value;
    else if (key == "out") cfg.out = value;
    else if (key == "preset") cfg.preset = value;
    else if (key == "variant") cfg.variant = value;
    else if (key == "l") cfg.l = parse_int(key, value);
    else if (key == "hidden1") cfg.hidden1 = parse_int(key, value);
    else if (key == "hidden2") cfg.hidden2 = parse_int(key, value);
    else if (key == "lr") cfg.lr = parse_double(key, value);
    else if (key == "batch") cfg.batch = parse_int(key, value);
    else if (key == "epochs") cfg.epochs = parse_int(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "patch") cfg.patch = parse_int(key, value);
    else if (key == "conv_stack") cfg.conv_stack = value;
    else if (key == "activation") cfg.activation = value;
    else if (key == "stage_a") cfg.stage_a = parse_int(key, value);
    else if (key == "stage_b") cfg.stage_b = parse_int(key, value);
    else if (key == "stage_c") cfg.stage_c = parse_int(key, value);
    else if (key == "normalize") cfg.normalize = value;
    else if (key == "threads") cfg.threads = parse_int(key, value);
    else if (key == "synth_classes") cfg.synth_classes = parse_int(key, value);
    else if (key == "synth_bands") cfg.synth_bands = parse_int(key, value);
    else if (key == "synth_rows") cfg.synth_rows = parse_int(key, value);
    else if (key == "synth_cols") cfg.synth_cols = parse_int(key, value);
    else if (key == "synth_redundancy") cfg.synth_redundancy = parse_int(key, value);
    else if (key == "synth_noise") cfg.synth_noise = parse_double(key, value);
    else if (key == "synth_texture") cfg.synth_texture = parse_double(key, value);
    else if (key == "train_per_class") cfg.train_per_class = value;
    else if (key == "test_per_class") cfg.test_per_class = value;
    else if (key == "sweep_l") cfg.sweep_l = value;
    else if (key == "sweep_hidden1") cfg.sweep_hidden1 = value;
    else if (key == "sweep_hidden2") cfg.sweep_hidden2 = value;
    else throw ConfigError("unknown config key '" + key + "'");
    cfg.set_keys.insert(key);
}

std::string config_get(const RunConfig& cfg, const std::string& key) {
    if (key == "cube") return cfg.cube;
    if (key == "labels") return cfg.labels;
    if (key == "split") return cfg.split;
    if (key == "checkpoint") return cfg.checkpoint;
    if (key == "out") return cfg.out;
    if (key == "preset") return cfg.preset;
    if (key == "variant") return cfg.variant;
    if (key == "l") return std::to_string(cfg.l);
    if (key == "hidden1") return std::to_string(cfg.hidden1);
    if (key == "hidden2") return std::to_string(cfg.hidden2);
    if (key == "lr") return format_double(cfg.lr);
    if (key == "batch") return std::to_string(cfg.batch);
    if (key == "epochs") return std::to_string(cfg.epochs);
    if (key == "seed") return std::to_string(cfg.seed);
    if (key == "patch") return std::to_string(cfg.patch);
    if (key == "conv_stack") return cfg.conv_stack;
    if (key == "activation") return cfg.activation;
    if (key == "stage_a") return std::to_string(cfg.stage_a);
    if (key == "stage_b") return std::to_string(cfg.stage_b);
    if (key == "stage_c") return std::to_string(cfg.stage_c);
    if (key == "normalize") return cfg.normalize;
    if (key == "threads") return std::to_string(cfg.threads);
    if (key == "synth_classes") return std::to_string(cfg.synth_classes);
    if (key == "synth_bands") return std::to_string(cfg.synth_bands);
    if (key == "synth_rows") return std::to_string(cfg.synth_rows);
    if (key == "synth_cols") return std::to_string(cfg.synth_cols);
    if (key == "synth_redundancy") return std::to_string(cfg.synth_redundancy);
    if (key == "synth_noise") return format_double(cfg.synth_noise);
    if (key == "synth_texture") return format_double(cfg.synth_texture);
    if (key == "train_per_class") return cfg.train_per_class;
    if (key == "test_per_class") return cfg.test_per_class;
    if (key == "sweep_l") return cfg.sweep_l;
    if (key == "sweep_hidden1") return cfg.sweep_hidden1;
    if (key == "sweep_hidden2") return cfg.sweep_hidden2;
    throw ConfigError("unknown config key '" + key + "'");
}

bool RunConfig::operator==(const RunConfig& other) const {
    for (const std::string& key : config_keys()) {
        if (config_get(*this, key) != config_get(other, key)) return false;
    }
    return true;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream stream(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        config_set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const std::string& key : config_keys()) {
        if (cfg.set_keys.count(key)) {
            out += key + " = " + config_get(cfg, key) + "\n";
        }
    }
    return out;
}

RunConfig parse_args(const std::vector<std::string>& args) {
    RunConfig cfg;
    bool first = true;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string arg = args[i];
        if (arg.rfind("--", 0) != 0) {
            throw ConfigError("expected --key value, got '" + arg + "'");
        }
        arg = arg.substr(2);
        std::string value;
        const std::size_t eq = arg.find('=');
        if (eq != std::string::npos) {
            value = arg.substr(eq + 1);
            arg = arg.substr(0, eq);
        } else {
            if (i + 1 >= args.size()) {
                throw ConfigError("flag --" + arg + " is missing its value");
            }
            value = args[++i];
        }
        if (arg == "config") {
            if (!first) {
                throw ConfigError("--config must come before other flags");
            }
            cfg = parse_config_file(value);
        } else {
            config_set(cfg, arg, value);
        }
        first = false;
    }
    return cfg;
}

void apply_preset(RunConfig& cfg) {
    if (cfg.preset.empty()) return;
    auto set_default = [&cfg](const std::string& key, const std::string& value) {
        if (!cfg.set_keys.count(key)) config_set(cfg, key, value);
    };
    if (cfg.preset == "indian-pines") {
        set_default("l", "10");
        set_default("hidden1", "128");
        set_default("hidden2", "256");
        set_default("train_per_class", "50,50,50,50,50,50,50,50,50,50,50,50,50,15,15,15");
    } else if (cfg.preset == "pavia-university") {
        if (cfg.variant == "sscas") {
            set_default("l", "4");
            set_default("hidden1", "256");
            set_default("hidden2", "256");
        } else {
            set_default("l", "8");
            set_default("hidden1", "256");
            set_default("hidden2", "16");
        }
        set_default("train_per_class", "548,540,392,524,265,532,375,514,231");
    } else {
        throw ConfigError("unknown preset '" + cfg.preset +
                          "' (indian-pines or pavia-university)");
    }
}

namespace {

std::vector<ConvSpec> parse_conv_stack(const std::string& text) {
    std::vector<ConvSpec> specs;
    for (const std::string& item : split_list(text)) {
        const std::size_t x = item.find('x');
        if (x == std::string::npos) {
            throw ConfigError("key 'conv_stack': expected KxC entries, got '" + item + "'");
        }
        ConvSpec spec;
        spec.kernel = static_cast<std::size_t>(parse_int("conv_stack", item.substr(0, x)));
        spec.channels = static_cast<std::size_t>(parse_int("conv_stack", item.substr(x + 1)));
        specs.push_back(spec);
    }
    if (specs.size() != 3) {
        throw ConfigError("key 'conv_stack': expected exactly 3 layers, got " +
                          std::to_string(specs.size()));
    }
    return specs;
}

std::vector<std::size_t> parse_counts(const std::string& key, const std::string& text,
                                      std::size_t classes) {
    std::vector<std::string> items = split_list(text);
    if (items.empty()) throw ConfigError("key '" + key + "': empty count list");
    std::vector<std::size_t> counts;
    for (const std::string& item : items) {
        const int v = parse_int(key, item);
        if (v < 0) throw ConfigError("key '" + key + "': negative count");
        counts.push_back(static_cast<std::size_t>(v));
    }
    if (counts.size() == 1) counts.assign(classes, counts[0]);
    if (counts.size() != classes) {
        throw ConfigError("key '" + key + "': " + std::to_string(counts.size()) +
                          " counts for " + std::to_string(classes) + " classes");
    }
    return counts;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text,
                                int fallback) {
    if (trim(text).empty()) return {fallback};
    std::vector<int> values;
    for (const std::string& item : split_list(text)) values.push_back(parse_int(key, item));
    return values;
}

bool is_spatial_variant(const std::string& variant) { return variant == "sscas"; }

const std::set<std::string>& spatial_only_keys() {
    static const std::set<std::string> keys = {"patch",   "conv_stack", "activation",
                                               "stage_a", "stage_b",    "stage_c"};
    return keys;
}

}  // namespace

void validate_config(const RunConfig& cfg, const std::string& command) {
    if (!is_spatial_variant(cfg.variant)) {
        parse_variant(cfg.variant);  // throws on unknown names
        for (const std::string& key : spatial_only_keys()) {
            if (cfg.set_keys.count(key)) {
                throw ConfigError("key '" + key + "' only applies to variant sscas (variant is '" +
                                  cfg.variant + "')");
            }
        }
    } else {
        if (cfg.patch < 1 || cfg.patch % 2 == 0) {
            throw ConfigError("key 'patch': must be odd and >= 1, got " +
                              std::to_string(cfg.patch));
        }
        parse_conv_stack(cfg.conv_stack);
        try {
            parse_activation(cfg.activation);
        } catch (const ArgumentError& e) {
            throw ConfigError(std::string("key 'activation': ") + e.what());
        }
        if (cfg.stage_a < 0 || cfg.stage_b < 0 || cfg.stage_c < 0) {
            throw ConfigError("stage epochs must be non-negative");
        }
    }
    if (cfg.l < 1) throw ConfigError("key 'l': must be >= 1");
    if (cfg.hidden1 < 1 || cfg.hidden2 < 1) throw ConfigError("hidden sizes must be >= 1");
    if (cfg.lr < 0) throw ConfigError("key 'lr': must be non-negative");
    if (cfg.batch < 1) throw ConfigError("key 'batch': must be >= 1");
    if (cfg.epochs < 0) throw ConfigError("key 'epochs': must be non-negative");
    if (cfg.threads < 1) throw ConfigError("key 'threads': must be >= 1");
    if (cfg.normalize != "full" && cfg.normalize != "train") {
        throw ConfigError("key 'normalize': expected full or train, got '" + cfg.normalize +
                          "'");
    }

    auto require = [&cfg, &command](const std::string& key) {
        if (config_get(cfg, key).empty()) {
            throw ConfigError("command '" + command + "' requires key '" + key + "'");
        }
    };
    if (command == "train" || command == "sweep") {
        require("cube");
        require("labels");
        require("split");
    } else if (command == "eval") {
        require("checkpoint");
        require("cube");
        require("split");
    } else if (command == "map") {
        require("checkpoint");
        require("cube");
    } else if (command == "synth") {
        if (cfg.synth_classes < 2) throw ConfigError("key 'synth_classes': must be >= 2");
        if (cfg.synth_bands < cfg.synth_classes) {
            throw ConfigError("key 'synth_bands': must be >= synth_classes");
        }
        if (cfg.synth_rows < 1 || cfg.synth_cols < 1) {
            throw ConfigError("synth image dims must be >= 1");
        }
        if (cfg.synth_redundancy < 1) {
            throw ConfigError("key 'synth_redundancy': must be >= 1");
        }
    } else {
        throw ConfigError("unknown command '" + command +
                          "' (train, eval, map, synth, sweep)");
    }
}

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out);
    return (fs::path(cfg.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

struct Dataset {
    HsiCube cube;       // normalized
    GroundTruth gt;
    SplitSpec split;
    std::size_t classes = 0;
};

Dataset load_dataset(const RunConfig& cfg, bool need_labels, bool need_split) {
    Dataset ds;
    ds.cube = load_cube(cfg.cube);
    if (need_labels) {
        ds.gt = load_labels(cfg.labels);
        if (ds.gt.rows != ds.cube.rows || ds.gt.cols != ds.cube.cols) {
            throw ArgumentError("label image is " + std::to_string(ds.gt.rows) + "x" +
                                std::to_string(ds.gt.cols) + " but cube is " +
                                std::to_string(ds.cube.rows) + "x" +
                                std::to_string(ds.cube.cols));
        }
        ds.classes = ds.gt.num_classes();
    }
    if (need_split) {
        ds.split = load_split(cfg.split);
        for (const SplitEntry& e : ds.split.entries) {
            if (e.row >= ds.cube.rows || e.col >= ds.cube.cols) {
                throw ArgumentError("split entry (" + std::to_string(e.row) + "," +
                                    std::to_string(e.col) + ") outside the cube");
            }
            ds.classes = std::max<std::size_t>(ds.classes, e.cls);
        }
    }
    if (cfg.normalize == "train") {
        if (!need_split) throw ConfigError("normalize=train requires a split");
        std::vector<SplitEntry> train;
        for (const SplitEntry& e : ds.split.entries) {
            if (e.role == SplitRole::Train) train.push_back(e);
        }
        ds.cube = normalize(ds.cube, band_extrema(ds.cube, train));
    } else {
        ds.cube = normalize(ds.cube);
    }
    return ds;
}

std::vector<Tensor> spectrum_sequence(const HsiCube& cube, std::size_t row, std::size_t col) {
    std::vector<Tensor> seq;
    seq.reserve(cube.bands);
    for (std::size_t b = 0; b < cube.bands; ++b) {
        seq.push_back(Tensor({1}, {cube.at(row, col, b)}));
    }
    return seq;
}

std::string format_log_csv(const TrainLog& log) {
    std::string csv = "epoch,stage,mean_loss,train_oa\n";
    for (const EpochLog& e : log) {
        csv += std::to_string(e.epoch) + "," + e.stage + "," + format_double(e.mean_loss) +
               "," + format_double(e.train_accuracy) + "\n";
    }
    return csv;
}

CascadeConfig cascade_config_from(const RunConfig& cfg, std::size_t bands,
                                  std::size_t classes, std::size_t input_dim) {
    CascadeConfig cc;
    cc.bands = bands;
    cc.sub_sequences = static_cast<std::size_t>(cfg.l);
    cc.hidden1 = static_cast<std::size_t>(cfg.hidden1);
    cc.hidden2 = static_cast<std::size_t>(cfg.hidden2);
    cc.classes = classes;
    cc.input_dim = input_dim;
    if (!is_spatial_variant(cfg.variant)) cc.variant = parse_variant(cfg.variant);
    return cc;
}

SgdConfig sgd_config_from(const RunConfig& cfg) {
    SgdConfig sgd;
    sgd.learning_rate = cfg.lr;
    sgd.batch_size = cfg.batch;
    sgd.epochs = cfg.epochs;
    sgd.seed = cfg.seed;
    return sgd;
}

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on cfg.threads
// workers. Deterministic: chunk boundaries depend only on n and the thread
// count, and callers merge per-chunk results in order.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    if (workers == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, w, begin, end] { fn(w, begin, end); });
    }
    for (std::thread& t : pool) t.join();
}

struct EvalResult {
    ConfusionMatrix cm;
    MetricsSummary summary;
};

EvalResult evaluate_split(const RunConfig& cfg, const Dataset& ds, CascadeModel* spectral,
                          SsCascadeModel* spatial) {
    const std::size_t classes =
        spectral ? spectral->config.classes : spatial->cascade.config.classes;
    std::vector<const SplitEntry*> test;
    for (const SplitEntry& e : ds.split.entries) {
        if (e.role == SplitRole::Test) test.push_back(&e);
    }
    if (test.empty()) throw ArgumentError("split has no test entries");
    for (const SplitEntry* e : test) {
        if (e->cls < 1 || e->cls > classes) {
            throw ArgumentError("split class " + std::to_string(e->cls) +
                                " out of range for a model with " + std::to_string(classes) +
                                " classes");
        }
    }

    std::vector<ConfusionMatrix> partial(
        static_cast<std::size_t>(std::max(1, cfg.threads)), ConfusionMatrix(classes));
    parallel_chunks(test.size(), cfg.threads,
                    [&](std::size_t worker, std::size_t begin, std::size_t end) {
                        for (std::size_t i = begin; i < end; ++i) {
                            const SplitEntry& e = *test[i];
                            std::size_t pred;
                            if (spectral) {
                                pred = predict(*spectral,
                                               spectrum_sequence(ds.cube, e.row, e.col));
                            } else {
                                pred = predict_pixel(*spatial, ds.cube, e.row, e.col);
                            }
                            partial[worker].accumulate(e.cls, pred + 1);
                        }
                    });
    EvalResult result{ConfusionMatrix(classes), {}};
    for (const ConfusionMatrix& cm : partial) result.cm.merge(cm);
    result.summary = summarize(result.cm);
    return result;
}

}  // namespace

void run_synth(const RunConfig& cfg) {
    SynthSpec spec;
    spec.classes = static_cast<std::size_t>(cfg.synth_classes);
    spec.bands = static_cast<std::size_t>(cfg.synth_bands);
    spec.rows = static_cast<std::size_t>(cfg.synth_rows);
    spec.cols = static_cast<std::size_t>(cfg.synth_cols);
    spec.redundancy = static_cast<std::size_t>(cfg.synth_redundancy);
    spec.noise = cfg.synth_noise;
    spec.texture_amp = cfg.synth_texture;
    spec.seed = cfg.seed;
    SynthData data = synth_hsi(spec);

    const std::vector<std::size_t> train =
        parse_counts("train_per_class", cfg.train_per_class, spec.classes);
    std::vector<std::size_t> test =
        parse_counts("test_per_class", cfg.test_per_class, spec.classes);
    bool all_zero = true;
    for (std::size_t t : test) all_zero = all_zero && t == 0;
    if (all_zero) test.clear();
    const SplitSpec split = build_split(data.gt, train, test, cfg.seed);

    const std::string cube_path = cfg.cube.empty() ? out_path(cfg, "cube.hsc1") : cfg.cube;
    const std::string labels_path =
        cfg.labels.empty() ? out_path(cfg, "labels.hsl1") : cfg.labels;
    const std::string split_path = cfg.split.empty() ? out_path(cfg, "split.csv") : cfg.split;
    save_cube(data.cube, cube_path);
    save_labels(data.gt, labels_path);
    save_split(split, split_path);
    std::printf("synth: wrote %s, %s, %s (%zu train / %zu test)\n", cube_path.c_str(),
                labels_path.c_str(), split_path.c_str(), split.count(SplitRole::Train),
                split.count(SplitRole::Test));
}

void run_train(const RunConfig& cfg) {
    Dataset ds = load_dataset(cfg, true, true);
    const SgdConfig sgd = sgd_config_from(cfg);
    const std::string model_path = out_path(cfg, "model.crnw");
    TrainLog log;

    if (is_spatial_variant(cfg.variant)) {
        SpatialConfig sp;
        sp.patch = static_cast<std::size_t>(cfg.patch);
        sp.conv = parse_conv_stack(cfg.conv_stack);
        sp.activation = parse_activation(cfg.activation);
        Rng init_rng(cfg.seed);
        SsCascadeModel model(
            sp, cascade_config_from(cfg, ds.cube.bands, ds.classes, sp.feature_dim()),
            init_rng);
        std::vector<PixelSample> train;
        for (const SplitEntry& e : ds.split.entries) {
            if (e.role == SplitRole::Train) {
                train.push_back({e.row, e.col, static_cast<std::size_t>(e.cls - 1)});
            }
        }
        StageSchedule schedule{cfg.stage_a, cfg.stage_b, cfg.stage_c};
        if (cfg.epochs > 0) log = train_sscas(model, ds.cube, train, schedule, sgd);
        save_model(model, model_path);
    } else {
        Rng init_rng(cfg.seed);
        CascadeModel model(cascade_config_from(cfg, ds.cube.bands, ds.classes, 1), init_rng);
        std::vector<Sample> train;
        for (const SplitEntry& e : ds.split.entries) {
            if (e.role == SplitRole::Train) {
                train.push_back({spectrum_sequence(ds.cube, e.row, e.col),
                                 static_cast<std::size_t>(e.cls - 1)});
            }
        }
        if (cfg.epochs > 0) log = train_cascade(model, sgd, train);
        save_model(model, model_path);
    }
    write_text(out_path(cfg, "train_log.csv"), format_log_csv(log));
    if (!log.empty()) {
        std::printf("train: %zu epochs, final loss %.6f, train OA %.4f -> %s\n", log.size(),
                    log.back().mean_loss, log.back().train_accuracy, model_path.c_str());
    } else {
        std::printf("train: wrote initialized model -> %s\n", model_path.c_str());
    }
}

void run_eval(const RunConfig& cfg) {
    Dataset ds = load_dataset(cfg, false, true);
    EvalResult result = [&] {
        if (checkpoint_is_spatial(cfg.checkpoint)) {
            SsCascadeModel model = load_sscas_model(cfg.checkpoint);
            return evaluate_split(cfg, ds, nullptr, &model);
        }
        CascadeModel model = load_cascade_model(cfg.checkpoint);
        return evaluate_split(cfg, ds, &model, nullptr);
    }();
    write_text(out_path(cfg, "metrics.txt"), format_metrics_text(result.summary));
    write_text(out_path(cfg, "metrics.kv"), format_metrics_kv(result.summary));
    std::printf("eval: oa %.4f aa %.4f kappa %.4f (%llu test pixels)\n", result.summary.oa,
                result.summary.aa, result.summary.kappa,
                static_cast<unsigned long long>(result.cm.total()));
}

void run_map(const RunConfig& cfg) {
    Dataset ds = load_dataset(cfg, false, false);
    std::optional<CascadeModel> spectral;
    std::optional<SsCascadeModel> spatial;
    if (checkpoint_is_spatial(cfg.checkpoint)) {
        spatial.emplace(load_sscas_model(cfg.checkpoint));
    } else {
        spectral.emplace(load_cascade_model(cfg.checkpoint));
    }

    const std::size_t classes =
        spatial ? spatial->cascade.config.classes : spectral->config.classes;
    const std::size_t n = ds.cube.rows * ds.cube.cols;
    std::vector<std::uint16_t> predictions(n, 0);
    parallel_chunks(n, cfg.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t r = i / ds.cube.cols;
            const std::size_t c = i % ds.cube.cols;
            std::size_t pred;
            if (spatial) {
                pred = predict_pixel(*spatial, ds.cube, r, c);
            } else {
                pred = predict(*spectral, spectrum_sequence(ds.cube, r, c));
            }
            predictions[i] = static_cast<std::uint16_t>(pred + 1);
        }
    });
    const std::string path = out_path(cfg, "map.ppm");
    render_map(predictions, ds.cube.rows, ds.cube.cols, default_palette(classes), path);
    std::printf("map: wrote %s (%zux%zu)\n", path.c_str(), ds.cube.rows, ds.cube.cols);
}

void run_sweep(const RunConfig& cfg) {
    const std::vector<int> ls = parse_int_list("sweep_l", cfg.sweep_l, cfg.l);
    const std::vector<int> h1s = parse_int_list("sweep_hidden1", cfg.sweep_hidden1, cfg.hidden1);
    const std::vector<int> h2s = parse_int_list("sweep_hidden2", cfg.sweep_hidden2, cfg.hidden2);

    std::string csv = "l,hidden1,hidden2,oa,aa,kappa,seconds\n";
    for (int l : ls) {
        for (int h1 : h1s) {
            for (int h2 : h2s) {
                RunConfig point = cfg;
                point.l = l;
                point.hidden1 = h1;
                point.hidden2 = h2;
                point.checkpoint = out_path(cfg, "sweep_model.crnw");
                const auto start = std::chrono::steady_clock::now();

                Dataset ds = load_dataset(point, true, true);
                EvalResult result = [&] {
                    if (is_spatial_variant(point.variant)) {
                        SpatialConfig sp;
                        sp.patch = static_cast<std::size_t>(point.patch);
                        sp.conv = parse_conv_stack(point.conv_stack);
                        sp.activation = parse_activation(point.activation);
                        Rng init_rng(point.seed);
                        SsCascadeModel model(
                            sp,
                            cascade_config_from(point, ds.cube.bands, ds.classes,
                                                sp.feature_dim()),
                            init_rng);
                        std::vector<PixelSample> train;
                        for (const SplitEntry& e : ds.split.entries) {
                            if (e.role == SplitRole::Train) {
                                train.push_back(
                                    {e.row, e.col, static_cast<std::size_t>(e.cls - 1)});
                            }
                        }
                        StageSchedule schedule{point.stage_a, point.stage_b, point.stage_c};
                        train_sscas(model, ds.cube, train, schedule, sgd_config_from(point));
                        return evaluate_split(point, ds, nullptr, &model);
                    }
                    Rng init_rng(point.seed);
                    CascadeModel model(cascade_config_from(point, ds.cube.bands, ds.classes, 1),
                                       init_rng);
                    std::vector<Sample> train;
                    for (const SplitEntry& e : ds.split.entries) {
                        if (e.role == SplitRole::Train) {
                            train.push_back({spectrum_sequence(ds.cube, e.row, e.col),
                                             static_cast<std::size_t>(e.cls - 1)});
                        }
                    }
                    train_cascade(model, sgd_config_from(point), train);
                    return evaluate_split(point, ds, &model, nullptr);
                }();

                const double seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                char row[160];
                std::snprintf(row, sizeof(row), "%d,%d,%d,%.4f,%.4f,%.4f,%.2f\n", l, h1, h2,
                              result.summary.oa, result.summary.aa, result.summary.kappa,
                              seconds);
                csv += row;
                std::printf("sweep: l=%d hidden1=%d hidden2=%d -> oa %.4f (%.2fs)\n", l, h1,
                            h2, result.summary.oa, seconds);
            }
        }
    }
    write_text(out_path(cfg, "sweep.csv"), csv);
}

void run_command(const std::string& command, RunConfig cfg) {
    apply_preset(cfg);
    validate_config(cfg, command);
    if (command == "synth") run_synth(cfg);
    else if (command == "train") run_train(cfg);
    else if (command == "eval") run_eval(cfg);
    else if (command == "map") run_map(cfg);
    else if (command == "sweep") run_sweep(cfg);
    else throw ConfigError("unknown command '" + command + "'");
}

}  // namespace casrnn
