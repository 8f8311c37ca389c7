#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlabel/clustering.hpp"
#include "hyperlabel/dataset.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

enum class EdgeStrategy { kGlobalClustering, kIntraCameraClustering, kGlobalKnn, kSelfLoop, kExplicit };

struct EdgeTag {
  EdgeStrategy strategy = EdgeStrategy::kExplicit;
  int k = 0;  // K for kGlobalKnn, camera for kIntraCameraClustering

  std::string to_string() const;
  friend bool operator==(const EdgeTag&, const EdgeTag&) = default;
};

struct Hyperedge {
  std::vector<int> members;  // ascending, no duplicates
  int seed = -1;             // centroid/medoid; -1 gives 0/1 incidence
  EdgeTag tag;
};

// Member with the largest summed J to the other members, ties to lower index.
int medoid(std::span<const int> members, const SimilarityMatrix& joint);

// One edge per cluster with at least two members, seeded at its medoid.
std::vector<Hyperedge> edges_from_global_clustering(const LabelMatrix& labels,
                                                    const SimilarityMatrix& joint);

std::vector<Hyperedge> edges_from_intra_camera_clustering(
    const std::vector<CameraLabels>& per_camera, const SimilarityMatrix& joint);

// For every vertex v and K in k_list: {v} ∪ KNN(v, K), seeded at v.
// Values of K beyond the index capacity are skipped with a warning.
std::vector<Hyperedge> edges_from_global_knn(const KnnIndex& index, std::span<const int> k_list);

// Median of J over all materialized unordered vertex pairs (i < j).
double median_similarity(const SimilarityMatrix& joint);

// w(e) = sum over unordered pairs i < j in e of exp(J(i,j)^2 / sigma^2).
// The first overload uses sigma = median_similarity(joint), falling back to 1
// when the median is zero.
std::vector<double> weigh_hyperedges(const std::vector<Hyperedge>& edges,
                                     const SimilarityMatrix& joint);
std::vector<double> weigh_hyperedges(const std::vector<Hyperedge>& edges,
                                     const SimilarityMatrix& joint, double sigma);

// Vertex-by-edge incidence with weights and degrees. The adjacency
// A = H W De^-1 Hᵀ is available either materialized or as an operator.
class Hypergraph {
 public:
  Hypergraph() = default;
  Hypergraph(Index num_vertices, std::vector<Hyperedge> edges, std::vector<double> weights,
             SparseMatrix incidence);

  Index num_vertices() const { return num_vertices_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  const std::vector<double>& weights() const { return weights_; }
  const SparseMatrix& incidence() const { return incidence_; }

  // d(v) = sum_e w(e) H(v,e); equals the row sums of A.
  const Vector& vertex_degrees() const { return vertex_degrees_; }
  // delta(e) = sum_v H(v,e).
  const Vector& edge_degrees() const { return edge_degrees_; }

  SparseMatrix adjacency() const;

  // A * x without forming A.
  Matrix apply_adjacency(const Matrix& x) const;

  // [{"seed", "members", "weight", "strategy"}]
  nlohmann::json edges_json() const;

 private:
  Index num_vertices_ = 0;
  std::vector<Hyperedge> edges_;
  std::vector<double> weights_;
  SparseMatrix incidence_;             // N x |E|
  SparseMatrix incidence_transposed_;  // |E| x N
  Vector vertex_degrees_;
  Vector edge_degrees_;
  Vector edge_scale_;  // w(e) / delta(e)
};

// H(v,e) = J(seed(e), v) for v in e (1 when the edge has no seed). Vertices
// outside every edge receive a unit self-loop with unit weight.
Hypergraph build_incidence(Index num_vertices, std::vector<Hyperedge> edges,
                           std::vector<double> weights, const SimilarityMatrix& joint);

// Concatenates edge lists, weighs them against J and builds the incidence.
Hypergraph merge(Index num_vertices, const std::vector<std::vector<Hyperedge>>& edge_lists,
                 const SimilarityMatrix& joint);

}  // namespace hyperlabel
