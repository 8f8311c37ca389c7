#pragma once

#include <optional>
#include <vector>

#include "hyperlabel/clustering.hpp"
#include "hyperlabel/dataset.hpp"
#include "hyperlabel/hypergraph.hpp"
#include "hyperlabel/propagation.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct HypergraphParams {
  std::vector<int> k_list{10, 20, 30, 40, 50};
  bool global_clustering = true;
  bool intra_camera = true;
  bool global_knn = true;

  void validate() const;
};

struct LabelGenerationConfig {
  RerankParams rerank;
  DbscanParams dbscan;
  StHistogramParams histogram;
  JointSimilarityParams joint;
  JointBuildOptions joint_build;
  HypergraphParams hypergraph;
  PropagationParams propagation;

  void validate(Index n) const;
};

struct LabelGenerationResult {
  LabelMatrix raw;      // DBSCAN over the re-ranked distance
  StHistogram histogram;
  SimilarityMatrix joint;
  Hypergraph graph;
  ReliableSelection reliable;
  IterationTrace residual_trace;
  SmoothResult refined;
  const LabelMatrix& labels() const { return refined.labels; }
};

// Clustering, spatio-temporal model, hypergraph and propagation on the given
// features. `histogram_override` skips fitting and uses the supplied model.
LabelGenerationResult generate_labels(const Matrix& features, const Dataset& dataset,
                                      const LabelGenerationConfig& config,
                                      const StHistogram* histogram_override = nullptr);

// DBSCAN over the k-reciprocal distance only.
LabelMatrix cluster_features(const Matrix& features, const LabelGenerationConfig& config);

}  // namespace hyperlabel
