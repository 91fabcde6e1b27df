#include <benchmark/benchmark.h>

#include "casrnn/cascade.hpp"
#include "casrnn/layers.hpp"
#include "casrnn/rng.hpp"
#include "casrnn/spatial.hpp"

using namespace casrnn;

namespace {

std::vector<Tensor> random_sequence(std::size_t k, std::size_t dim, Rng& rng) {
    std::vector<Tensor> seq;
    seq.reserve(k);
    for (std::size_t t = 0; t < k; ++t) {
        Tensor v({dim});
        for (double& x : v.data) x = rng.uniform(-1.0, 1.0);
        seq.push_back(std::move(v));
    }
    return seq;
}

void bm_gru_forward(benchmark::State& state) {
    const std::size_t hidden = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    GruParams p(1, hidden);
    p.init(rng);
    const auto seq = random_sequence(200, 1, rng);
    const Tensor h0({hidden});
    GruSequenceCache cache;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gru_forward(p, seq, h0, cache));
    }
}
BENCHMARK(bm_gru_forward)->Arg(16)->Arg(64)->Arg(128);

void bm_gru_backward(benchmark::State& state) {
    const std::size_t hidden = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    GruParams p(1, hidden);
    p.init(rng);
    const auto seq = random_sequence(200, 1, rng);
    const Tensor h0({hidden});
    GruSequenceCache cache;
    gru_forward(p, seq, h0, cache);
    Tensor d({hidden});
    d.fill(0.1);
    for (auto _ : state) {
        zero_grads(p.params());
        benchmark::DoNotOptimize(gru_backward(p, cache, d));
    }
}
BENCHMARK(bm_gru_backward)->Arg(16)->Arg(64)->Arg(128);

void bm_cascade_forward(benchmark::State& state) {
    Rng rng(1);
    CascadeConfig cfg;
    cfg.bands = 200;
    cfg.sub_sequences = 10;
    cfg.hidden1 = static_cast<std::size_t>(state.range(0));
    cfg.hidden2 = static_cast<std::size_t>(state.range(0));
    cfg.classes = 16;
    cfg.variant = Variant::FeatureFusion;
    CascadeModel m(cfg, rng);
    const auto seq = random_sequence(cfg.bands, 1, rng);
    CascadeCache cache;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cascade_forward(m, seq, cache));
    }
}
BENCHMARK(bm_cascade_forward)->Arg(16)->Arg(64);

void bm_band_cnn_forward(benchmark::State& state) {
    Rng rng(1);
    SpatialConfig sp;  // 27x27 stack
    BandCnn cnn(sp, rng);
    Tensor img({1, 27, 27});
    for (double& v : img.data) v = rng.uniform(0.0, 1.0);
    BandCnnCache cache;
    for (auto _ : state) {
        benchmark::DoNotOptimize(band_cnn_forward(cnn, img, cache));
    }
}
BENCHMARK(bm_band_cnn_forward);

void bm_partition(benchmark::State& state) {
    for (auto _ : state) {
        for (std::size_t k = 1; k <= 256; ++k) {
            benchmark::DoNotOptimize(partition_bands(k, std::min<std::size_t>(k, 10)));
        }
    }
}
BENCHMARK(bm_partition);

}  // namespace

BENCHMARK_MAIN();
