#include "hyperlabel/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

void PropagationParams::validate() const {
  if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw ParameterError("propagation: alpha1 outside (0,1)");
  if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw ParameterError("propagation: alpha2 outside (0,1)");
  if (reliable_per_cluster < 1) throw ParameterError("propagation: reliable_per_cluster < 1");
  if (max_iters < 1) throw ParameterError("propagation: max_iters < 1");
  if (!(tol > 0.0)) throw ParameterError("propagation: tol must be > 0");
}

ReliableSelection select_reliable(const LabelMatrix& labels, const SimilarityMatrix& joint,
                                  int per_cluster) {
  if (per_cluster < 1) throw ParameterError("select_reliable: per_cluster < 1");
  const Index n = labels.size();
  ReliableSelection out{ReliableMask(static_cast<std::size_t>(n), 0),
                        Matrix::Zero(n, labels.n_clusters)};
  for (const auto& members : labels.members()) {
    std::vector<std::pair<double, int>> scored;
    scored.reserve(members.size());
    for (int m : members) {
      double sum = 0.0;
      for (int o : members) {
        if (o != m) sum += joint(m, o);
      }
      scored.emplace_back(sum, m);
    }
    const auto take = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(per_cluster));
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                      scored.end(), [](const auto& a, const auto& b) {
                        return a.first > b.first || (a.first == b.first && a.second < b.second);
                      });
    for (std::size_t k = 0; k < take; ++k) {
      const int m = scored[k].second;
      out.mask[m] = 1;
      out.y_reliable(m, labels.assignments[m]) = 1.0;
    }
  }
  return out;
}

namespace {

void check_finite(const Matrix& m, const char* stage, int iteration) {
  if (!m.allFinite()) {
    throw NumericError(std::string(stage) + ": non-finite values at iteration " +
                       std::to_string(iteration));
  }
}

Vector inverse_degrees(const Hypergraph& graph, double power) {
  const Vector& d = graph.vertex_degrees();
  Vector out(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw NumericError("propagation: vertex " + std::to_string(i) + " has zero degree");
    out[i] = std::pow(d[i], -power);
  }
  return out;
}

}  // namespace

ResidualResult propagate_residual(const Hypergraph& graph, const Matrix& y, const Matrix& y_reliable,
                                  const ReliableMask& reliable, const PropagationParams& params) {
  params.validate();
  const Index n = graph.num_vertices();
  if (y.rows() != n || y_reliable.rows() != n || y.cols() != y_reliable.cols() ||
      static_cast<Index>(reliable.size()) != n) {
    throw ValidationError("propagate_residual: shape mismatch");
  }
  const Vector inv_sqrt = inverse_degrees(graph, 0.5);

  Matrix pinned = y - y_reliable;
  ResidualResult out{Matrix::Zero(n, y.cols()), {}};
  for (Index i = 0; i < n; ++i) {
    if (reliable[i]) out.error.row(i) = pinned.row(i);
  }
  for (int it = 1; it <= params.max_iters; ++it) {
    Matrix next = inv_sqrt.asDiagonal() * graph.apply_adjacency(inv_sqrt.asDiagonal() * out.error);
    next *= params.alpha1;
    for (Index i = 0; i < n; ++i) {
      if (reliable[i]) next.row(i) = pinned.row(i);
    }
    check_finite(next, "propagate_residual", it);
    const double delta = next.size() ? (next - out.error).cwiseAbs().maxCoeff() : 0.0;
    out.error.swap(next);
    out.trace.iterations = it;
    out.trace.deltas.push_back(delta);
    if (delta < params.tol) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

Matrix correct_labels(const Matrix& y_reliable, const Matrix& error, double scale_s) {
  if (y_reliable.rows() != error.rows() || y_reliable.cols() != error.cols()) {
    throw ValidationError("correct_labels: shape mismatch");
  }
  return y_reliable + scale_s * error;
}

LabelMatrix harden(const Matrix& soft, std::vector<int>* kept_clusters) {
  const Index n = soft.rows();
  std::vector<int> raw(static_cast<std::size_t>(n), kNoise);
  std::vector<char> used(static_cast<std::size_t>(soft.cols()), 0);
  for (Index i = 0; i < n; ++i) {
    int best = kNoise;
    double best_value = 0.0;
    for (Index c = 0; c < soft.cols(); ++c) {
      if (soft(i, c) > best_value) {
        best_value = soft(i, c);
        best = static_cast<int>(c);
      }
    }
    raw[i] = best;
    if (best != kNoise) used[best] = 1;
  }
  std::vector<int> remap(static_cast<std::size_t>(soft.cols()), -1);
  std::vector<int> kept;
  for (Index c = 0; c < soft.cols(); ++c) {
    if (used[c]) {
      remap[c] = static_cast<int>(kept.size());
      kept.push_back(static_cast<int>(c));
    }
  }
  for (int& a : raw) {
    if (a != kNoise) a = remap[a];
  }
  if (kept_clusters) *kept_clusters = kept;
  return LabelMatrix(std::move(raw), static_cast<int>(kept.size()));
}

SmoothResult smooth_labels(const Hypergraph& graph, const Matrix& y_corrected,
                           const PropagationParams& params) {
  params.validate();
  const Index n = graph.num_vertices();
  if (y_corrected.rows() != n) throw ValidationError("smooth_labels: shape mismatch");
  const Vector inv_deg = inverse_degrees(graph, 1.0);

  SmoothResult out;
  out.soft = y_corrected;
  const Matrix anchor = (1.0 - params.alpha2) * y_corrected;
  for (int it = 1; it <= params.max_iters; ++it) {
    Matrix next = anchor + params.alpha2 * (inv_deg.asDiagonal() * graph.apply_adjacency(out.soft));
    check_finite(next, "smooth_labels", it);
    const double delta = next.size() ? (next - out.soft).cwiseAbs().maxCoeff() : 0.0;
    out.soft.swap(next);
    out.trace.iterations = it;
    out.trace.deltas.push_back(delta);
    if (delta < params.tol) {
      out.trace.converged = true;
      break;
    }
  }
  out.labels = harden(out.soft, &out.kept_clusters);
  return out;
}

}  // namespace hyperlabel
