#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct RetrievalProtocol {
  // Drop gallery items sharing both identity and camera with the query.
  bool cross_camera = true;
};

struct QueryGallerySplit {
  std::vector<int> query;
  std::vector<int> gallery;
};

// First sighting (in record order) of every (identity, camera) pair becomes a
// query; everything else is gallery.
QueryGallerySplit split_first_sighting(std::span<const int> identities,
                                       std::span<const int> cameras);

struct RetrievalMetrics {
  double map = 0.0;
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  int queries = 0;  // queries with at least one valid positive

  nlohmann::json to_json() const;
};

struct QueryResult {
  double ap = 0.0;
  int first_hit = -1;  // 0-based rank of the first positive, -1 if none
  bool valid = false;
};

// Ranks by descending score, ties by ascending gallery position. AP is the
// mean precision over the ranks of valid positives.
QueryResult evaluate_query(std::span<const double> scores, int query_id, int query_camera,
                           std::span<const int> gallery_ids, std::span<const int> gallery_cameras,
                           const RetrievalProtocol& protocol);

RetrievalMetrics evaluate(const Matrix& scores, std::span<const int> query_ids,
                          std::span<const int> query_cameras, std::span<const int> gallery_ids,
                          std::span<const int> gallery_cameras,
                          const RetrievalProtocol& protocol = {});

// J over a query x gallery block of visual scores.
Matrix rescore_joint(const Matrix& visual, const StHistogram& hist, const Dataset& dataset,
                     std::span<const int> query, std::span<const int> gallery,
                     const JointSimilarityParams& params);

struct PairwiseScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pair counting over i < j. Noise records are singletons. With no predicted
// pairs precision is 1, with no true pairs recall is 1, and F1 is 0 when both
// precision and recall are 0.
PairwiseScores pairwise_scores(std::span<const int> predicted, std::span<const int> truth);
inline double pairwise_f1(std::span<const int> predicted, std::span<const int> truth) {
  return pairwise_scores(predicted, truth).f1;
}

struct DatasetEvaluation {
  RetrievalMetrics visual;
  std::optional<RetrievalMetrics> joint;
};

// Transductive retrieval on a labelled dataset using the first-sighting
// split. `features` replaces the stored embeddings when given; the joint
// score is reported when a histogram is supplied.
DatasetEvaluation evaluate_dataset(const Dataset& dataset, const Matrix* features,
                                   const StHistogram* hist, const JointSimilarityParams& params,
                                   const RetrievalProtocol& protocol = {});

}  // namespace hyperlabel
