#pragma once

#include <span>
#include <vector>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct DbscanParams {
  double eps = 0.6;
  int min_samples = 4;  // neighbourhood size including the point itself

  void validate() const;
};

// DBSCAN over a dense distance matrix. Core points have at least min_samples
// points (self included) within eps. Clusters are the connected components of
// core points, numbered by their smallest core index. A border point joins the
// cluster of its nearest core neighbour, ties going to the smaller index.
LabelMatrix dbscan(const Matrix& distance, const DbscanParams& params);

struct CameraLabels {
  int camera = 0;
  std::vector<int> records;  // global record ids, ascending
  LabelMatrix labels;        // indexed like `records`, camera-local cluster ids
};

// One DBSCAN run per camera over the camera's sub-matrix.
std::vector<CameraLabels> dbscan_per_camera(const Matrix& distance, const Dataset& dataset,
                                            const DbscanParams& params);

// Neighbour lists by descending similarity, self excluded, ties by index.
class KnnIndex {
 public:
  KnnIndex(const Matrix& similarity, int k_max);

  Index size() const { return static_cast<Index>(lists_.size()); }
  int k_max() const { return k_max_; }
  std::span<const int> neighbors(Index vertex) const { return lists_[vertex]; }

 private:
  int k_max_ = 0;
  std::vector<std::vector<int>> lists_;
};

std::vector<int> knn(const Matrix& similarity, Index vertex, int k);
std::vector<int> knn(const KnnIndex& index, Index vertex, int k);

}  // namespace hyperlabel
