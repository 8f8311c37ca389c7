#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

// One unit-norm feature row per record.
struct InstanceMemory {
  Matrix rows;  // N x d
};

// Unit-norm prototype per (cluster, camera) cell with at least one member.
class CameraPrototypeMemory {
 public:
  CameraPrototypeMemory() = default;
  explicit CameraPrototypeMemory(double momentum) : momentum_(momentum) {}

  double momentum() const { return momentum_; }
  Index size() const { return prototypes_.rows(); }
  Index dim() const { return prototypes_.cols(); }

  const Matrix& prototypes() const { return prototypes_; }
  int cluster_of(Index k) const { return cluster_[k]; }
  int camera_of(Index k) const { return camera_[k]; }

  std::optional<int> find(int cluster, int camera) const;
  // Prototype ids owned by a camera, ascending by cluster id.
  const std::vector<int>& of_camera(int camera) const;

  void add(int cluster, int camera, const Vector& unit_feature);
  void set(int k, const Vector& unit_feature) { prototypes_.row(k) = unit_feature.transpose(); }

 private:
  double momentum_ = 0.2;
  Matrix prototypes_;
  std::vector<int> cluster_;
  std::vector<int> camera_;
  std::map<std::pair<int, int>, int> index_;
  std::vector<std::vector<int>> by_camera_;
};

struct Memories {
  InstanceMemory instance;
  CameraPrototypeMemory prototypes;
};

// Instance memory = features; prototype = normalized mean of each non-empty
// (cluster, camera) cell. Cells whose mean vanishes are dropped with a warning.
Memories init_memories(const Matrix& features, const LabelMatrix& labels,
                       std::span<const int> cameras, double momentum = 0.2);

void update_instance_memory(InstanceMemory& memory, Index index, const Vector& feature);

// p <- normalize((1 - m) p + m f). Unknown cells are ignored (returns false).
bool update_prototype_memory(CameraPrototypeMemory& memory, int cluster, int camera,
                             const Vector& feature);

enum class ApVariant { kPaper, kDifference };

ApVariant parse_ap_variant(const std::string& name);
std::string to_string(ApVariant variant);

struct SmoothApParams {
  int pool_size = 1000;  // clamped to N - 1
  ApVariant variant = ApVariant::kPaper;
  double difference_temperature = 0.01;  // sigmoid sharpness of the difference variant
};

struct ApResult {
  double ap = 0.0;
  Vector grad;  // d AP / d query
  int positives = 0;
  int negatives = 0;
};

// Smoothed AP of one query against the pool of its most similar memory rows
// (the query's own row excluded). Returns nullopt when the pool has no
// positive or the query is noise.
std::optional<ApResult> smooth_ap(const Vector& query, Index query_index,
                                  const InstanceMemory& memory, const LabelMatrix& labels,
                                  const SmoothApParams& params);

struct LossResult {
  double loss = 0.0;
  Matrix grads;  // B x d, d loss / d batch feature
  int contributing = 0;
};

// Mean of (1 - AP_q) over queries that are not skipped.
LossResult loss_inst(const Matrix& batch, std::span<const int> indices,
                     const InstanceMemory& memory, const LabelMatrix& labels,
                     const SmoothApParams& params);

// Y_soft(i, c) = mean of J(i, m) over members m of cluster c, raised to
// `power` (1 leaves it unchanged), rows renormalized to sum to one (rows with
// zero mass stay zero).
Matrix soft_labels(const SimilarityMatrix& joint, const LabelMatrix& labels, double power = 1.0);

// Sum over cameras of the camera-mean soft-label cross entropy against the
// camera's own prototypes, logits f·p / tau.
LossResult loss_intra(const Matrix& batch, std::span<const int> indices,
                      std::span<const int> cameras, const CameraPrototypeMemory& memory,
                      const Matrix& soft, double tau);

// Mean over samples with at least one positive (own cluster, other camera)
// of the mean positive log-likelihood against positives plus the
// hard_negatives highest-scoring prototypes of other clusters.
LossResult loss_inter(const Matrix& batch, std::span<const int> indices,
                      std::span<const int> cameras, const CameraPrototypeMemory& memory,
                      const LabelMatrix& labels, double tau, int hard_negatives = 50);

struct LossWeights {
  double intra = 1.0;
  double inter = 1.0;
  double inst = 10.0;

  void validate() const;
};

struct ObjectiveParams {
  double tau = 0.07;
  int hard_negatives = 50;
  double soft_label_power = 1.0;
  SmoothApParams ap;
};

// Read-only snapshot consumed by total_loss.
struct ObjectiveState {
  const Memories* memories = nullptr;
  const LabelMatrix* labels = nullptr;
  const Matrix* soft = nullptr;
  std::span<const int> cameras;
  ObjectiveParams params;
};

struct LossBreakdown {
  double intra = 0.0;
  double inter = 0.0;
  double inst = 0.0;
  double total = 0.0;
  Matrix grads;
};

// lambda1 L_intra + lambda2 L_inter + lambda3 L_inst. Components with zero
// weight are not evaluated and report 0.
LossBreakdown total_loss(const Matrix& batch, std::span<const int> indices,
                         const ObjectiveState& state, const LossWeights& weights);

}  // namespace hyperlabel
