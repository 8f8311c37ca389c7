#include <benchmark/benchmark.h>

#include "hyperlabel/label_pipeline.hpp"
#include "hyperlabel/synthgen.hpp"

using namespace hyperlabel;

namespace {

struct Fixture {
  SynthResult synth;
  LabelGenerationConfig config;
  LabelGenerationResult result;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    SynthConfig sc;
    sc.n_identities = 100;
    sc.noise = 0.6;
    sc.seed = 3;
    f.synth = generate(sc);
    f.config.dbscan.eps = 0.5;
    f.result = generate_labels(f.synth.dataset.embeddings, f.synth.dataset, f.config);
    return f;
  }();
  return f;
}

}  // namespace

static void BM_ApplyAdjacency(benchmark::State& state) {
  const Fixture& f = fixture();
  const Matrix y = f.result.raw.dense();
  for (auto _ : state) {
    Matrix z = f.result.graph.apply_adjacency(y);
    benchmark::DoNotOptimize(z);
  }
  state.counters["edges"] = static_cast<double>(f.result.graph.num_edges());
}
BENCHMARK(BM_ApplyAdjacency)->Unit(benchmark::kMicrosecond);

static void BM_SmoothLabels(benchmark::State& state) {
  const Fixture& f = fixture();
  const Matrix y = f.result.raw.dense();
  for (auto _ : state) {
    auto s = smooth_labels(f.result.graph, y, f.config.propagation);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SmoothLabels)->Unit(benchmark::kMillisecond);

static void BM_GenerateLabels(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    auto r = generate_labels(f.synth.dataset.embeddings, f.synth.dataset, f.config);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_GenerateLabels)->Unit(benchmark::kMillisecond)->Iterations(3);
