#include "hyperlabel/trainer.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "hyperlabel/error.hpp"
#include "hyperlabel/evalkit.hpp"

namespace hyperlabel {

void TrainConfig::validate() const {
  if (epochs < 0) throw ParameterError("train: epochs must be >= 0");
  if (iters_per_epoch < 1) throw ParameterError("train: iters_per_epoch must be >= 1");
  if (instances < 1) throw ParameterError("train: instances must be >= 1");
  if (batch_size < instances || batch_size % instances != 0) {
    throw ParameterError("train: batch_size must be a positive multiple of instances");
  }
  if (!(lr > 0.0)) throw ParameterError("train: lr must be > 0");
  if (lr_step < 1) throw ParameterError("train: lr_step must be >= 1");
  if (!(lr_gamma > 0.0)) throw ParameterError("train: lr_gamma must be > 0");
  if (warmup_epochs < 0) throw ParameterError("train: warmup_epochs must be >= 0");
  if (epochs > 0 && warmup_epochs > epochs) {
    throw ParameterError("train: warmup_epochs must not exceed epochs");
  }
  if (!(momentum > 0.0 && momentum <= 1.0)) throw ParameterError("train: momentum must be in (0, 1]");
  if (output_dim < 0) throw ParameterError("train: output_dim must be >= 0");
  if (!(objective.tau > 0.0)) throw ParameterError("train: tau must be > 0");
  if (objective.hard_negatives < 1) throw ParameterError("train: hard_negatives must be >= 1");
  if (!(objective.soft_label_power > 0.0)) throw ParameterError("train: soft_label_power must be > 0");
  if (objective.ap.pool_size < 1) throw ParameterError("train: pool_size must be >= 1");
  weights.validate();
}

double TrainConfig::learning_rate(int epoch) const {
  return lr * std::pow(lr_gamma, epoch / lr_step);
}

std::vector<int> sample_batch(const LabelMatrix& labels, int batch_size, int instances,
                              std::mt19937_64& rng) {
  const auto clusters = labels.members();
  std::vector<int> usable;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (!clusters[c].empty()) usable.push_back(static_cast<int>(c));
  }
  std::vector<int> batch;
  if (usable.empty()) return batch;
  const int p = batch_size / instances;

  std::vector<int> chosen;
  if (static_cast<int>(usable.size()) >= p) {
    std::shuffle(usable.begin(), usable.end(), rng);
    chosen.assign(usable.begin(), usable.begin() + p);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
    for (int i = 0; i < p; ++i) chosen.push_back(usable[pick(rng)]);
  }
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int c : chosen) {
    std::vector<int> members = clusters[c];
    if (static_cast<int>(members.size()) >= instances) {
      std::shuffle(members.begin(), members.end(), rng);
      batch.insert(batch.end(), members.begin(), members.begin() + instances);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      for (int i = 0; i < instances; ++i) batch.push_back(members[pick(rng)]);
    }
  }
  return batch;
}

namespace {

int count_noise(const LabelMatrix& labels) {
  return static_cast<int>(std::count(labels.assignments.begin(), labels.assignments.end(), kNoise));
}

}  // namespace

TrainResult train(const Dataset& dataset, const LabelGenerationConfig& labels_config,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  labels_config.validate(dataset.size());
  std::mt19937_64 rng(config.seed);

  const Index d_in = dataset.dim();
  const Index d_out = config.output_dim > 0 ? config.output_dim : d_in;
  TrainResult out;
  out.adapter = Adapter::near_identity(d_in, d_out, rng, config.init_noise);
  Vector params = out.adapter.parameters();
  AdamParams adam = config.adam;
  AdamW optimizer(params.size(), adam);

  std::optional<LabelMatrix> previous;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.lr = config.learning_rate(epoch);

    const Matrix features = out.adapter.embed(dataset.embeddings);
    LabelGenerationResult gen = generate_labels(features, dataset, labels_config);
    LabelMatrix labels = gen.labels();
    if (labels.n_clusters == 0 && previous) {
      spdlog::warn("train: epoch {} produced no clusters; reusing previous labels", epoch);
      labels = *previous;
      metrics.reused_labels = true;
    }
    metrics.clusters = labels.n_clusters;
    metrics.noise = count_noise(labels);
    out.histogram = gen.histogram;

    const bool warmup = epoch < config.warmup_epochs;
    LossWeights weights = config.weights;
    if (warmup) weights = {config.weights.intra, 0.0, 0.0};

    if (labels.n_clusters > 0) {
      const Matrix soft = soft_labels(gen.joint, labels, config.objective.soft_label_power);
      Memories memories = init_memories(features, labels, dataset.cameras, config.momentum);
      ObjectiveState state{&memories, &labels, &soft, dataset.cameras, config.objective};

      const Index usable = dataset.size() - metrics.noise;
      const auto cap = static_cast<int>(
          ((usable + config.batch_size - 1) / config.batch_size) * 4);
      const int iterations = std::min(config.iters_per_epoch, std::max(cap, 1));
      double total_sum = 0.0;
      for (int it = 0; it < iterations; ++it) {
        const std::vector<int> batch = sample_batch(labels, config.batch_size, config.instances, rng);
        Matrix inputs(static_cast<Index>(batch.size()), d_in);
        for (std::size_t b = 0; b < batch.size(); ++b) inputs.row(b) = dataset.embeddings.row(batch[b]);
        const Adapter::Activations acts = out.adapter.forward(inputs);
        const LossBreakdown loss = total_loss(acts.unit, batch, state, weights);
        if (!std::isfinite(loss.total)) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        const Adapter::Gradients grads = out.adapter.backward(inputs, acts, loss.grads);
        optimizer.step(params, Adapter::flatten(grads), metrics.lr);
        out.adapter.set_parameters(params);

        for (std::size_t b = 0; b < batch.size(); ++b) {
          const Vector f = acts.unit.row(b).transpose();
          update_instance_memory(memories.instance, batch[b], f);
          update_prototype_memory(memories.prototypes, labels.assignments[batch[b]],
                                  dataset.cameras[batch[b]], f);
        }
        out.losses.push_back({epoch, it, loss.intra, loss.inter, loss.inst, loss.total});
        total_sum += loss.total;
      }
      metrics.iterations = iterations;
      metrics.mean_total = total_sum / iterations;
      previous = labels;
    }

    if (dataset.ground_truth) {
      const Matrix after = out.adapter.embed(dataset.embeddings);
      metrics.map = evaluate_dataset(dataset, &after, nullptr, labels_config.joint).visual.map;
      metrics.pairwise_f1 = pairwise_f1(labels.assignments, *dataset.ground_truth);
    }
    spdlog::info("train: epoch {} lr={:.3g} clusters={} noise={} loss={:.4f}{}", epoch, metrics.lr,
                 metrics.clusters, metrics.noise, metrics.mean_total,
                 metrics.map ? fmt::format(" mAP={:.4f}", *metrics.map) : std::string());
    out.labels = labels;
    out.epochs.push_back(metrics);
    if (on_epoch) on_epoch({epoch, &out.labels, &out.histogram, &out.adapter, &out.epochs.back()});
  }
  return out;
}

}  // namespace hyperlabel
