#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "hyperlabel/adapter.hpp"
#include "hyperlabel/dataset.hpp"
#include "hyperlabel/label_pipeline.hpp"
#include "hyperlabel/objectives.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct TrainConfig {
  int epochs = 50;
  int iters_per_epoch = 400;
  int batch_size = 32;
  int instances = 4;  // records per cluster in a batch
  double lr = 3.5e-4;
  int lr_step = 20;
  double lr_gamma = 0.1;
  int warmup_epochs = 5;  // intra-camera loss only
  AdamParams adam;
  double momentum = 0.2;
  int output_dim = 0;  // 0 keeps the input dimension
  double init_noise = 1e-3;
  LossWeights weights;
  ObjectiveParams objective;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate(int epoch) const;
};

// batch_size / instances clusters (with replacement when fewer exist), then
// `instances` members of each (with replacement when the cluster is smaller).
// Noise records are never drawn. Empty when no cluster exists.
std::vector<int> sample_batch(const LabelMatrix& labels, int batch_size, int instances,
                              std::mt19937_64& rng);

struct LossRecord {
  int epoch = 0;
  int iteration = 0;
  double intra = 0.0;
  double inter = 0.0;
  double inst = 0.0;
  double total = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  int iterations = 0;
  int clusters = 0;
  int noise = 0;
  bool reused_labels = false;
  double mean_total = 0.0;
  std::optional<double> map;           // visual mAP after the epoch
  std::optional<double> pairwise_f1;   // pseudo labels vs identities
};

struct EpochArtifacts {
  int epoch = 0;
  const LabelMatrix* labels = nullptr;
  const StHistogram* histogram = nullptr;
  const Adapter* adapter = nullptr;
  const EpochMetrics* metrics = nullptr;
};

struct TrainResult {
  Adapter adapter;
  std::vector<LossRecord> losses;
  std::vector<EpochMetrics> epochs;
  LabelMatrix labels;     // pseudo labels of the last epoch
  StHistogram histogram;  // spatio-temporal model of the last epoch
};

using EpochCallback = std::function<void(const EpochArtifacts&)>;

// Alternates label generation on the current embeddings with an epoch of
// memory-based optimization of a linear adapter.
TrainResult train(const Dataset& dataset, const LabelGenerationConfig& labels_config,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace hyperlabel
