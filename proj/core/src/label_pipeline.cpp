#include "hyperlabel/label_pipeline.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

void HypergraphParams::validate() const {
  if (!global_clustering && !intra_camera && !global_knn) {
    throw ParameterError("hypergraph: at least one edge strategy must be enabled");
  }
  for (int k : k_list) {
    if (k < 1) throw ParameterError("hypergraph: K values must be >= 1");
  }
}

void LabelGenerationConfig::validate(Index n) const {
  rerank.validate(n);
  dbscan.validate();
  histogram.validate();
  joint.validate();
  hypergraph.validate();
  propagation.validate();
}

LabelMatrix cluster_features(const Matrix& features, const LabelGenerationConfig& config) {
  config.rerank.validate(features.rows());
  const SimilarityMatrix dist = kreciprocal_jaccard_distance(features, config.rerank);
  return dbscan(dist.dense(), config.dbscan);
}

LabelGenerationResult generate_labels(const Matrix& features, const Dataset& dataset,
                                      const LabelGenerationConfig& config,
                                      const StHistogram* histogram_override) {
  const Index n = dataset.size();
  if (features.rows() != n) throw ValidationError("pipeline: feature rows differ from dataset size");
  config.validate(n);

  LabelGenerationResult out;
  std::vector<CameraLabels> per_camera;
  {
    const SimilarityMatrix dist = kreciprocal_jaccard_distance(features, config.rerank);
    out.raw = dbscan(dist.dense(), config.dbscan);
    if (config.hypergraph.intra_camera) {
      per_camera = dbscan_per_camera(dist.dense(), dataset, config.dbscan);
    }
  }
  spdlog::debug("pipeline: DBSCAN found {} clusters", out.raw.n_clusters);

  out.histogram = histogram_override != nullptr
                      ? *histogram_override
                      : fit_st_histogram(dataset, out.raw, config.histogram);
  out.joint = build_joint_similarity(features, dataset, out.histogram, config.joint,
                                     config.joint_build);

  std::vector<std::vector<Hyperedge>> lists;
  if (config.hypergraph.global_clustering) {
    lists.push_back(edges_from_global_clustering(out.raw, out.joint));
  }
  if (config.hypergraph.intra_camera) {
    lists.push_back(edges_from_intra_camera_clustering(per_camera, out.joint));
  }
  if (config.hypergraph.global_knn && !config.hypergraph.k_list.empty()) {
    const int wanted = *std::max_element(config.hypergraph.k_list.begin(),
                                         config.hypergraph.k_list.end());
    const int k_max = static_cast<int>(std::min<Index>(wanted, n - 1));
    if (k_max >= 1) {
      const KnnIndex index(visual_similarity(features), k_max);
      lists.push_back(edges_from_global_knn(index, config.hypergraph.k_list));
    }
  }
  out.graph = merge(n, lists, out.joint);

  if (out.raw.n_clusters == 0) {
    spdlog::warn("pipeline: clustering produced no clusters; refinement skipped");
    out.reliable.mask.assign(static_cast<std::size_t>(n), 0);
    out.reliable.y_reliable = Matrix::Zero(n, 0);
    out.refined.soft = Matrix::Zero(n, 0);
    out.refined.labels = out.raw;
    return out;
  }

  out.reliable = select_reliable(out.raw, out.joint, config.propagation.reliable_per_cluster);
  const Matrix y = out.raw.dense();
  ResidualResult residual =
      propagate_residual(out.graph, y, out.reliable.y_reliable, out.reliable.mask, config.propagation);
  out.residual_trace = std::move(residual.trace);
  const Matrix corrected =
      correct_labels(out.reliable.y_reliable, residual.error, config.propagation.scale_s);
  out.refined = smooth_labels(out.graph, corrected, config.propagation);
  spdlog::debug("pipeline: refinement kept {} clusters", out.refined.labels.n_clusters);
  return out;
}

}  // namespace hyperlabel
