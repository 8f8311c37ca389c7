#include "hyperlabel/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

std::string EdgeTag::to_string() const {
  switch (strategy) {
    case EdgeStrategy::kGlobalClustering: return "cluster";
    case EdgeStrategy::kIntraCameraClustering: return "camera:" + std::to_string(k);
    case EdgeStrategy::kGlobalKnn: return "knn:" + std::to_string(k);
    case EdgeStrategy::kSelfLoop: return "self";
    case EdgeStrategy::kExplicit: return "explicit";
  }
  return "unknown";
}

int medoid(std::span<const int> members, const SimilarityMatrix& joint) {
  int best = -1;
  double best_sum = -std::numeric_limits<double>::infinity();
  for (int m : members) {
    double sum = 0.0;
    for (int o : members) {
      if (o != m) sum += joint(m, o);
    }
    if (sum > best_sum || (sum == best_sum && m < best)) {
      best = m;
      best_sum = sum;
    }
  }
  return best;
}

namespace {

void append_cluster_edges(const std::vector<std::vector<int>>& clusters, EdgeTag tag,
                          const SimilarityMatrix& joint, std::vector<Hyperedge>& out) {
  for (const auto& members : clusters) {
    if (members.size() < 2) continue;
    Hyperedge e;
    e.members = members;
    std::sort(e.members.begin(), e.members.end());
    e.seed = medoid(e.members, joint);
    e.tag = tag;
    out.push_back(std::move(e));
  }
}

}  // namespace

std::vector<Hyperedge> edges_from_global_clustering(const LabelMatrix& labels,
                                                    const SimilarityMatrix& joint) {
  std::vector<Hyperedge> out;
  append_cluster_edges(labels.members(), {EdgeStrategy::kGlobalClustering, 0}, joint, out);
  return out;
}

std::vector<Hyperedge> edges_from_intra_camera_clustering(
    const std::vector<CameraLabels>& per_camera, const SimilarityMatrix& joint) {
  std::vector<Hyperedge> out;
  for (const auto& cam : per_camera) {
    auto clusters = cam.labels.members();
    for (auto& members : clusters) {
      for (int& m : members) m = cam.records[m];
    }
    append_cluster_edges(clusters, {EdgeStrategy::kIntraCameraClustering, cam.camera}, joint,
                         out);
  }
  return out;
}

std::vector<Hyperedge> edges_from_global_knn(const KnnIndex& index, std::span<const int> k_list) {
  std::vector<Hyperedge> out;
  for (int k : k_list) {
    if (k < 1 || k > index.k_max() || k >= index.size()) {
      spdlog::warn("hypergraph: skipping KNN hyperedges with K={} (N={}, index K_max={})", k,
                   index.size(), index.k_max());
      continue;
    }
    for (Index v = 0; v < index.size(); ++v) {
      Hyperedge e;
      const auto nb = index.neighbors(v);
      e.members.assign(nb.begin(), nb.begin() + k);
      e.members.push_back(static_cast<int>(v));
      std::sort(e.members.begin(), e.members.end());
      e.seed = static_cast<int>(v);
      e.tag = {EdgeStrategy::kGlobalKnn, k};
      out.push_back(std::move(e));
    }
  }
  return out;
}

double median_similarity(const SimilarityMatrix& joint) {
  std::vector<double> values;
  const Index n = joint.size();
  if (joint.is_dense()) values.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    joint.for_each_in_row(i, [&](Index j, double v) {
      if (j > i) values.push_back(v);
    });
  }
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<double> weigh_hyperedges(const std::vector<Hyperedge>& edges,
                                     const SimilarityMatrix& joint) {
  double sigma = median_similarity(joint);
  if (!(sigma > 0.0)) {
    spdlog::warn("hypergraph: median similarity is {}; using sigma = 1", sigma);
    sigma = 1.0;
  }
  return weigh_hyperedges(edges, joint, sigma);
}

std::vector<double> weigh_hyperedges(const std::vector<Hyperedge>& edges,
                                     const SimilarityMatrix& joint, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("hypergraph: sigma must be > 0");
  const double inv_sigma2 = 1.0 / (sigma * sigma);
  std::vector<double> weights(edges.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& m = edges[e].members;
    double w = 0.0;
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        const double s = joint(m[a], m[b]);
        w += std::exp(s * s * inv_sigma2);
      }
    }
    weights[e] = w;
  }
  return weights;
}

Hypergraph::Hypergraph(Index num_vertices, std::vector<Hyperedge> edges,
                       std::vector<double> weights, SparseMatrix incidence)
    : num_vertices_(num_vertices),
      edges_(std::move(edges)),
      weights_(std::move(weights)),
      incidence_(std::move(incidence)) {
  incidence_.makeCompressed();
  incidence_transposed_ = SparseMatrix(incidence_.transpose());
  const Index m = num_edges();
  const Eigen::Map<const Vector> w(weights_.data(), m);
  vertex_degrees_ = incidence_ * w;
  edge_degrees_ = incidence_transposed_ * Vector::Ones(num_vertices_);
  edge_scale_ = w.cwiseQuotient(edge_degrees_);
}

SparseMatrix Hypergraph::adjacency() const {
  SparseMatrix scaled = incidence_ * edge_scale_.asDiagonal();
  SparseMatrix a = scaled * incidence_transposed_;
  a.makeCompressed();
  return a;
}

Matrix Hypergraph::apply_adjacency(const Matrix& x) const {
  Matrix per_edge = incidence_transposed_ * x;
  per_edge = edge_scale_.asDiagonal() * per_edge;
  return incidence_ * per_edge;
}

nlohmann::json Hypergraph::edges_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    nlohmann::ordered_json item;
    item["seed"] = edges_[e].seed;
    item["members"] = edges_[e].members;
    item["weight"] = weights_[e];
    item["strategy"] = edges_[e].tag.to_string();
    out.push_back(nlohmann::json::parse(item.dump()));
  }
  return out;
}

Hypergraph build_incidence(Index num_vertices, std::vector<Hyperedge> edges,
                           std::vector<double> weights, const SimilarityMatrix& joint) {
  if (edges.size() != weights.size()) {
    throw ValidationError("hypergraph: edge and weight counts differ");
  }
  // Sparse J may lack an entry for a member; it keeps a negligible membership.
  constexpr double kMinIncidence = 1e-12;
  std::vector<char> covered(static_cast<std::size_t>(num_vertices), 0);
  std::size_t nnz = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!std::isfinite(weights[e]) || !(weights[e] > 0.0)) {
      throw NumericError("hypergraph: edge " + std::to_string(e) + " has weight " +
                         std::to_string(weights[e]));
    }
    auto& members = edges[e].members;
    if (members.empty()) throw ValidationError("hypergraph: empty hyperedge");
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
      throw ValidationError("hypergraph: duplicate member in hyperedge " + std::to_string(e));
    }
    for (int v : members) {
      if (v < 0 || v >= num_vertices) throw ValidationError("hypergraph: member out of range");
      covered[v] = 1;
    }
    nnz += edges[e].members.size();
  }
  for (Index v = 0; v < num_vertices; ++v) {
    if (covered[v]) continue;
    edges.push_back(Hyperedge{{static_cast<int>(v)}, static_cast<int>(v), {EdgeStrategy::kSelfLoop, 0}});
    weights.push_back(1.0);
    ++nnz;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nnz);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    for (int v : edge.members) {
      double h = 1.0;
      if (edge.seed >= 0 && edge.tag.strategy != EdgeStrategy::kSelfLoop) {
        h = std::max(joint(edge.seed, v), kMinIncidence);
      }
      triplets.emplace_back(v, static_cast<Index>(e), h);
    }
  }
  SparseMatrix h(num_vertices, static_cast<Index>(edges.size()));
  h.setFromTriplets(triplets.begin(), triplets.end());
  return Hypergraph(num_vertices, std::move(edges), std::move(weights), std::move(h));
}

Hypergraph merge(Index num_vertices, const std::vector<std::vector<Hyperedge>>& edge_lists,
                 const SimilarityMatrix& joint) {
  std::vector<Hyperedge> all;
  for (const auto& list : edge_lists) all.insert(all.end(), list.begin(), list.end());
  std::vector<double> weights = weigh_hyperedges(all, joint);
  return build_incidence(num_vertices, std::move(all), std::move(weights), joint);
}

}  // namespace hyperlabel
