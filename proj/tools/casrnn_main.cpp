#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "casrnn/errors.hpp"
#include "casrnn/run.hpp"

namespace {

void usage() {
    std::puts(
        "usage: casrnn <command> [--config FILE] [--key value ...]\n"
        "\n"
        "commands:\n"
        "  synth   generate a synthetic dataset (cube.hsc1, labels.hsl1, split.csv)\n"
        "  train   train a model and write model.crnw + train_log.csv\n"
        "  eval    evaluate a checkpoint on the split's test pixels\n"
        "  map     render a per-pixel classification map (map.ppm)\n"
        "  sweep   grid over l / hidden1 / hidden2, writing sweep.csv\n"
        "\n"
        "Flags mirror config-file keys (key = value lines, '#' comments); a flag\n"
        "overrides the same key from --config. Common keys:\n"
        "  variant     rnn | cas | cas-f | cas-o | sscas\n"
        "  cube, labels, split, checkpoint, out\n"
        "  l, hidden1, hidden2, lr, batch, epochs, seed\n"
        "  preset      indian-pines | pavia-university\n"
        "  patch, conv_stack, activation, stage_a, stage_b, stage_c   (sscas)\n"
        "  synth_classes, synth_bands, synth_rows, synth_cols,\n"
        "  synth_redundancy, synth_noise, synth_texture,\n"
        "  train_per_class, test_per_class                            (synth)\n"
        "  sweep_l, sweep_hidden1, sweep_hidden2                      (sweep)\n");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2 || std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h") {
        usage();
        return argc < 2 ? 2 : 0;
    }
    const std::string command = argv[1];
    std::vector<std::string> args(argv + 2, argv + argc);
    try {
        casrnn::run_command(command, casrnn::parse_args(args));
        return 0;
    } catch (const casrnn::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
