#include "hyperlabel/clustering.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

void DbscanParams::validate() const {
  if (!(eps > 0.0)) throw ParameterError("dbscan: eps must be > 0");
  if (min_samples < 1) throw ParameterError("dbscan: min_samples must be >= 1");
}

LabelMatrix dbscan(const Matrix& distance, const DbscanParams& params) {
  params.validate();
  if (distance.rows() != distance.cols()) throw ValidationError("dbscan: distance not square");
  const Index n = distance.rows();

  std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (distance(i, j) <= params.eps) neighbours[i].push_back(static_cast<int>(j));
    }
  }
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    core[i] = static_cast<Index>(neighbours[i].size()) >= params.min_samples;
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), kNoise);
  int next = 0;
  std::deque<int> frontier;
  for (Index seed = 0; seed < n; ++seed) {
    if (!core[seed] || assignment[seed] != kNoise) continue;
    const int id = next++;
    assignment[seed] = id;
    frontier.push_back(static_cast<int>(seed));
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop_front();
      for (int q : neighbours[p]) {
        if (core[q] && assignment[q] == kNoise) {
          assignment[q] = id;
          frontier.push_back(q);
        }
      }
    }
  }

  for (Index i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = -1;
    double best_distance = std::numeric_limits<double>::infinity();
    for (int q : neighbours[i]) {  // ascending index, so strict < keeps the smaller id
      if (core[q] && distance(i, q) < best_distance) {
        best = q;
        best_distance = distance(i, q);
      }
    }
    if (best >= 0) assignment[i] = assignment[best];
  }
  return LabelMatrix(std::move(assignment), next);
}

std::vector<CameraLabels> dbscan_per_camera(const Matrix& distance, const Dataset& dataset,
                                            const DbscanParams& params) {
  if (distance.rows() != dataset.size()) {
    throw ValidationError("dbscan_per_camera: distance/dataset size mismatch");
  }
  std::vector<CameraLabels> out(static_cast<std::size_t>(dataset.num_cameras));
  for (int c = 0; c < dataset.num_cameras; ++c) out[c].camera = c;
  for (Index i = 0; i < dataset.size(); ++i) {
    out[dataset.cameras[i]].records.push_back(static_cast<int>(i));
  }
  for (auto& cam : out) {
    const auto m = static_cast<Index>(cam.records.size());
    Matrix sub(m, m);
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) sub(a, b) = distance(cam.records[a], cam.records[b]);
    }
    cam.labels = dbscan(sub, params);
  }
  return out;
}

namespace {

std::vector<int> top_k_row(const Matrix& similarity, Index vertex, int k) {
  const Index n = similarity.rows();
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    if (j != vertex) order.push_back(static_cast<int>(j));
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
    const double sa = similarity(vertex, a);
    const double sb = similarity(vertex, b);
    return sa > sb || (sa == sb && a < b);
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

void check_k(Index n, int k) {
  if (k < 1 || k >= n) {
    throw ParameterError("knn: K=" + std::to_string(k) + " must satisfy 1 <= K < N=" +
                         std::to_string(n));
  }
}

}  // namespace

KnnIndex::KnnIndex(const Matrix& similarity, int k_max) : k_max_(k_max) {
  check_k(similarity.rows(), k_max);
  lists_.resize(static_cast<std::size_t>(similarity.rows()));
#pragma omp parallel for schedule(static)
  for (Index v = 0; v < similarity.rows(); ++v) lists_[v] = top_k_row(similarity, v, k_max);
}

std::vector<int> knn(const Matrix& similarity, Index vertex, int k) {
  check_k(similarity.rows(), k);
  return top_k_row(similarity, vertex, k);
}

std::vector<int> knn(const KnnIndex& index, Index vertex, int k) {
  if (k < 1 || k > index.k_max()) {
    throw ParameterError("knn: K=" + std::to_string(k) + " exceeds index capacity " +
                         std::to_string(index.k_max()));
  }
  const auto list = index.neighbors(vertex);
  return {list.begin(), list.begin() + k};
}

}  // namespace hyperlabel
