#include <benchmark/benchmark.h>

#include "hyperlabel/clustering.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/synthgen.hpp"

using namespace hyperlabel;

namespace {

Dataset make(int identities) {
  SynthConfig sc;
  sc.n_identities = identities;
  sc.images_per_identity = 10;
  sc.seed = 1;
  return generate(sc).dataset;
}

}  // namespace

static void BM_KReciprocalJaccard(benchmark::State& state) {
  const Dataset ds = make(static_cast<int>(state.range(0)));
  RerankParams p;
  for (auto _ : state) {
    auto d = kreciprocal_jaccard_distance(ds, p);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_KReciprocalJaccard)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_Dbscan(benchmark::State& state) {
  const Dataset ds = make(static_cast<int>(state.range(0)));
  const Matrix dist = kreciprocal_jaccard_distance(ds, RerankParams{}).dense();
  DbscanParams p;
  for (auto _ : state) {
    auto labels = dbscan(dist, p);
    benchmark::DoNotOptimize(labels);
  }
}
BENCHMARK(BM_Dbscan)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_FitHistogram(benchmark::State& state) {
  const SynthResult r = [] {
    SynthConfig sc;
    sc.seed = 2;
    return generate(sc);
  }();
  const LabelMatrix truth = LabelMatrix::from_assignments(*r.dataset.ground_truth);
  for (auto _ : state) {
    auto h = fit_st_histogram(r.dataset, truth, StHistogramParams{});
    benchmark::DoNotOptimize(h);
  }
}
BENCHMARK(BM_FitHistogram)->Unit(benchmark::kMillisecond);
