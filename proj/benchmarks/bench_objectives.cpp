#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "hyperlabel/objectives.hpp"
#include "hyperlabel/synthgen.hpp"

using namespace hyperlabel;

namespace {

struct Fixture {
  Dataset data;
  LabelMatrix labels;
  Memories memories;
  Matrix soft;
  std::vector<int> batch;
  Matrix features;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    SynthConfig sc;
    sc.seed = 4;
    f.data = generate(sc).dataset;
    f.labels = LabelMatrix::from_assignments(*f.data.ground_truth);
    f.memories = init_memories(f.data.embeddings, f.labels, f.data.cameras);
    f.soft = f.labels.dense();
    std::mt19937_64 rng(5);
    std::vector<int> all(static_cast<std::size_t>(f.data.size()));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    f.batch.assign(all.begin(), all.begin() + 32);
    f.features.resize(32, f.data.dim());
    for (int b = 0; b < 32; ++b) f.features.row(b) = f.data.embeddings.row(f.batch[b]);
    return f;
  }();
  return f;
}

}  // namespace

static void BM_SmoothAp(benchmark::State& state) {
  const Fixture& f = fixture();
  SmoothApParams p;
  p.pool_size = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = loss_inst(f.features, f.batch, f.memories.instance, f.labels, p);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_SmoothAp)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_TotalLoss(benchmark::State& state) {
  const Fixture& f = fixture();
  ObjectiveState s{&f.memories, &f.labels, &f.soft, f.data.cameras, {}};
  for (auto _ : state) {
    auto r = total_loss(f.features, f.batch, s, LossWeights{});
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_TotalLoss)->Unit(benchmark::kMillisecond);
