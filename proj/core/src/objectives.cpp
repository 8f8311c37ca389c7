#include "hyperlabel/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const std::vector<int> kNoPrototypes;

}  // namespace

std::optional<int> CameraPrototypeMemory::find(int cluster, int camera) const {
  const auto it = index_.find({cluster, camera});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::vector<int>& CameraPrototypeMemory::of_camera(int camera) const {
  if (camera < 0 || camera >= static_cast<int>(by_camera_.size())) return kNoPrototypes;
  return by_camera_[camera];
}

void CameraPrototypeMemory::add(int cluster, int camera, const Vector& unit_feature) {
  const auto k = static_cast<int>(prototypes_.rows());
  if (k == 0) prototypes_.resize(0, unit_feature.size());
  prototypes_.conservativeResize(k + 1, unit_feature.size());
  prototypes_.row(k) = unit_feature.transpose();
  cluster_.push_back(cluster);
  camera_.push_back(camera);
  index_[{cluster, camera}] = k;
  if (camera >= static_cast<int>(by_camera_.size())) by_camera_.resize(camera + 1);
  by_camera_[camera].push_back(k);
}

Memories init_memories(const Matrix& features, const LabelMatrix& labels,
                       std::span<const int> cameras, double momentum) {
  if (labels.size() != features.rows() || static_cast<Index>(cameras.size()) != features.rows()) {
    throw ValidationError("init_memories: features, labels and cameras differ in size");
  }
  Memories out{InstanceMemory{features}, CameraPrototypeMemory(momentum)};
  std::map<std::pair<int, int>, Vector> sums;
  for (Index i = 0; i < features.rows(); ++i) {
    const int c = labels.assignments[i];
    if (c == kNoise) continue;
    auto [it, inserted] = sums.try_emplace({c, cameras[i]}, Vector::Zero(features.cols()));
    it->second += features.row(i).transpose();
  }
  for (const auto& [key, sum] : sums) {  // ordered by (cluster, camera)
    const double norm = sum.norm();
    if (!(norm > 1e-12)) {
      spdlog::warn("memory: dropping prototype of cluster {} camera {} (zero mean)", key.first,
                   key.second);
      continue;
    }
    out.prototypes.add(key.first, key.second, sum / norm);
  }
  return out;
}

void update_instance_memory(InstanceMemory& memory, Index index, const Vector& feature) {
  const double norm = feature.norm();
  if (!(norm > 0.0)) throw NumericError("instance memory: zero feature");
  memory.rows.row(index) = (feature / norm).transpose();
}

bool update_prototype_memory(CameraPrototypeMemory& memory, int cluster, int camera,
                             const Vector& feature) {
  const auto k = memory.find(cluster, camera);
  if (!k) return false;
  const double m = memory.momentum();
  const Vector mixed = (1.0 - m) * memory.prototypes().row(*k).transpose() + m * feature;
  const double norm = mixed.norm();
  if (!(norm > 0.0)) return false;
  memory.set(*k, mixed / norm);
  return true;
}

ApVariant parse_ap_variant(const std::string& name) {
  if (name == "paper") return ApVariant::kPaper;
  if (name == "difference") return ApVariant::kDifference;
  throw ConfigError("unknown ap_variant '" + name + "' (expected paper|difference)");
}

std::string to_string(ApVariant variant) {
  return variant == ApVariant::kPaper ? "paper" : "difference";
}

std::optional<ApResult> smooth_ap(const Vector& query, Index query_index,
                                  const InstanceMemory& memory, const LabelMatrix& labels,
                                  const SmoothApParams& params) {
  const Matrix& rows = memory.rows;
  const Index n = rows.rows();
  if (params.pool_size < 1) throw ParameterError("smooth_ap: pool_size must be >= 1");
  const int label = labels.assignments[query_index];
  if (label == kNoise || n < 2) return std::nullopt;

  const Vector scores = rows * query;
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j != query_index) pool.push_back(static_cast<int>(j));
  }
  const auto size = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(params.pool_size));
  if (size < pool.size()) {
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size), pool.end(),
                     [&](int a, int b) {
                       return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                     });
    pool.resize(size);
    std::sort(pool.begin(), pool.end());
  }
  std::vector<int> positives;
  std::vector<int> negatives;
  for (int j : pool) {
    (labels.assignments[j] == label ? positives : negatives).push_back(j);
  }
  if (positives.empty()) return std::nullopt;

  ApResult out;
  out.positives = static_cast<int>(positives.size());
  out.negatives = static_cast<int>(negatives.size());
  out.grad = Vector::Zero(query.size());

  if (params.variant == ApVariant::kPaper) {
    // Inner sums do not depend on the outer positive, so the mean collapses
    // to a single ratio.
    double pos = 0.0;
    double neg = 0.0;
    Vector dpos = Vector::Zero(query.size());
    Vector dneg = Vector::Zero(query.size());
    for (int j : positives) {
      const double g = sigmoid(scores[j]);
      pos += g;
      dpos += g * (1.0 - g) * rows.row(j).transpose();
    }
    for (int j : negatives) {
      const double g = sigmoid(scores[j]);
      neg += g;
      dneg += g * (1.0 - g) * rows.row(j).transpose();
    }
    const double den = 1.0 + pos + neg;
    out.ap = (1.0 + pos) / den;
    out.grad = (neg * dpos - (1.0 + pos) * dneg) / (den * den);
    return out;
  }

  const double temp = params.difference_temperature;
  if (!(temp > 0.0)) throw ParameterError("smooth_ap: difference_temperature must be > 0");
  const auto np = static_cast<double>(positives.size());
  for (int i : positives) {
    double rank_pos = 1.0;
    double rank_all = 1.0;
    Vector d_pos = Vector::Zero(query.size());
    Vector d_all = Vector::Zero(query.size());
    const auto accumulate = [&](int j, bool positive) {
      const double u = sigmoid((scores[j] - scores[i]) / temp);
      const Vector du = (u * (1.0 - u) / temp) * (rows.row(j) - rows.row(i)).transpose();
      rank_all += u;
      d_all += du;
      if (positive) {
        rank_pos += u;
        d_pos += du;
      }
    };
    for (int j : positives) {
      if (j != i) accumulate(j, true);
    }
    for (int j : negatives) accumulate(j, false);
    out.ap += rank_pos / rank_all / np;
    out.grad += (d_pos * rank_all - rank_pos * d_all) / (rank_all * rank_all * np);
  }
  return out;
}

LossResult loss_inst(const Matrix& batch, std::span<const int> indices,
                     const InstanceMemory& memory, const LabelMatrix& labels,
                     const SmoothApParams& params) {
  LossResult out;
  out.grads = Matrix::Zero(batch.rows(), batch.cols());
  for (Index b = 0; b < batch.rows(); ++b) {
    const auto r = smooth_ap(batch.row(b).transpose(), indices[b], memory, labels, params);
    if (!r) continue;
    out.loss += 1.0 - r->ap;
    out.grads.row(b) = -r->grad.transpose();
    ++out.contributing;
  }
  if (out.contributing > 0) {
    out.loss /= out.contributing;
    out.grads /= out.contributing;
  }
  return out;
}

Matrix soft_labels(const SimilarityMatrix& joint, const LabelMatrix& labels, double power) {
  if (!(power > 0.0)) throw ParameterError("soft_labels: power must be > 0");
  const Index n = labels.size();
  if (joint.size() != n) throw ValidationError("soft_labels: J and labels differ in size");
  std::vector<double> sizes(static_cast<std::size_t>(labels.n_clusters), 0.0);
  for (int a : labels.assignments) {
    if (a != kNoise) sizes[a] += 1.0;
  }
  Matrix out = Matrix::Zero(n, labels.n_clusters);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    joint.for_each_in_row(i, [&](Index m, double v) {
      const int c = labels.assignments[m];
      if (c != kNoise) out(i, c) += v;
    });
    for (Index c = 0; c < labels.n_clusters; ++c) {
      out(i, c) /= sizes[c];
      if (power != 1.0) out(i, c) = std::pow(out(i, c), power);
    }
    const double total = out.row(i).sum();
    if (total > 0.0) out.row(i) /= total;
  }
  return out;
}

LossResult loss_intra(const Matrix& batch, std::span<const int> indices,
                      std::span<const int> cameras, const CameraPrototypeMemory& memory,
                      const Matrix& soft, double tau) {
  if (!(tau > 0.0)) throw ParameterError("loss_intra: tau must be > 0");
  LossResult out;
  out.grads = Matrix::Zero(batch.rows(), batch.cols());
  std::map<int, int> per_camera;
  for (Index b = 0; b < batch.rows(); ++b) ++per_camera[cameras[indices[b]]];

  for (Index b = 0; b < batch.rows(); ++b) {
    const int idx = indices[b];
    const int cam = cameras[idx];
    const auto& protos = memory.of_camera(cam);
    if (protos.size() < 2) continue;
    Vector target(static_cast<Index>(protos.size()));
    for (std::size_t k = 0; k < protos.size(); ++k) {
      const int cluster = memory.cluster_of(protos[k]);
      target[static_cast<Index>(k)] = cluster < soft.cols() ? soft(idx, cluster) : 0.0;
    }
    const double mass = target.sum();
    if (!(mass > 0.0)) continue;
    target /= mass;

    Vector logits(static_cast<Index>(protos.size()));
    for (std::size_t k = 0; k < protos.size(); ++k) {
      logits[static_cast<Index>(k)] = memory.prototypes().row(protos[k]).dot(batch.row(b)) / tau;
    }
    const double peak = logits.maxCoeff();
    const Vector expd = (logits.array() - peak).exp().matrix();
    const double z = expd.sum();
    const double lse = peak + std::log(z);
    const Vector prob = expd / z;

    const double scale = 1.0 / per_camera[cam];
    out.loss += scale * (lse - target.dot(logits));
    Vector grad = Vector::Zero(batch.cols());
    for (std::size_t k = 0; k < protos.size(); ++k) {
      const auto kk = static_cast<Index>(k);
      grad += (prob[kk] - target[kk]) * memory.prototypes().row(protos[k]).transpose();
    }
    out.grads.row(b) = (scale / tau) * grad.transpose();
    ++out.contributing;
  }
  return out;
}

LossResult loss_inter(const Matrix& batch, std::span<const int> indices,
                      std::span<const int> cameras, const CameraPrototypeMemory& memory,
                      const LabelMatrix& labels, double tau, int hard_negatives) {
  if (!(tau > 0.0)) throw ParameterError("loss_inter: tau must be > 0");
  LossResult out;
  out.grads = Matrix::Zero(batch.rows(), batch.cols());
  const Matrix& protos = memory.prototypes();
  for (Index b = 0; b < batch.rows(); ++b) {
    const int idx = indices[b];
    const int label = labels.assignments[idx];
    if (label == kNoise) continue;
    const Vector logits = protos * batch.row(b).transpose() / tau;
    std::vector<int> positives;
    std::vector<int> negatives;
    for (Index k = 0; k < memory.size(); ++k) {
      if (memory.cluster_of(k) == label) {
        if (memory.camera_of(k) != cameras[idx]) positives.push_back(static_cast<int>(k));
      } else {
        negatives.push_back(static_cast<int>(k));
      }
    }
    if (positives.empty()) continue;
    if (static_cast<int>(negatives.size()) > hard_negatives) {
      std::nth_element(negatives.begin(), negatives.begin() + hard_negatives, negatives.end(),
                       [&](int a, int c) {
                         return logits[a] > logits[c] || (logits[a] == logits[c] && a < c);
                       });
      negatives.resize(static_cast<std::size_t>(std::max(hard_negatives, 0)));
    }
    std::vector<int> all = positives;
    all.insert(all.end(), negatives.begin(), negatives.end());
    double peak = -std::numeric_limits<double>::infinity();
    for (int k : all) peak = std::max(peak, logits[k]);
    double z = 0.0;
    for (int k : all) z += std::exp(logits[k] - peak);
    const double lse = peak + std::log(z);

    double mean_pos = 0.0;
    Vector grad = Vector::Zero(batch.cols());
    for (int k : positives) {
      mean_pos += logits[k];
      grad -= protos.row(k).transpose();
    }
    mean_pos /= static_cast<double>(positives.size());
    grad /= static_cast<double>(positives.size());
    for (int k : all) grad += std::exp(logits[k] - lse) * protos.row(k).transpose();

    out.loss += lse - mean_pos;
    out.grads.row(b) = grad.transpose() / tau;
    ++out.contributing;
  }
  if (out.contributing > 0) {
    out.loss /= out.contributing;
    out.grads /= out.contributing;
  }
  return out;
}

void LossWeights::validate() const {
  if (!(intra >= 0.0 && inter >= 0.0 && inst >= 0.0)) {
    throw ParameterError("loss weights must be non-negative");
  }
  if (intra == 0.0 && inter == 0.0 && inst == 0.0) {
    throw ParameterError("loss weights must not all be zero");
  }
}

LossBreakdown total_loss(const Matrix& batch, std::span<const int> indices,
                         const ObjectiveState& state, const LossWeights& weights) {
  weights.validate();
  LossBreakdown out;
  out.grads = Matrix::Zero(batch.rows(), batch.cols());
  const Memories& mem = *state.memories;
  if (weights.intra != 0.0) {
    auto r = loss_intra(batch, indices, state.cameras, mem.prototypes, *state.soft,
                        state.params.tau);
    out.intra = r.loss;
    out.grads += weights.intra * r.grads;
  }
  if (weights.inter != 0.0) {
    auto r = loss_inter(batch, indices, state.cameras, mem.prototypes, *state.labels,
                        state.params.tau, state.params.hard_negatives);
    out.inter = r.loss;
    out.grads += weights.inter * r.grads;
  }
  if (weights.inst != 0.0) {
    auto r = loss_inst(batch, indices, mem.instance, *state.labels, state.params.ap);
    out.inst = r.loss;
    out.grads += weights.inst * r.grads;
  }
  out.total = weights.intra * out.intra + weights.inter * out.inter + weights.inst * out.inst;
  return out;
}

}  // namespace hyperlabel
