#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

// Square similarity (or distance) matrix stored either dense or as a sparse
// row-major pattern. Entries missing from a sparse pattern read as zero.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(Matrix dense);
  explicit SimilarityMatrix(SparseMatrix sparse);

  Index size() const { return dense_mode_ ? dense_.rows() : sparse_.rows(); }
  bool is_dense() const { return dense_mode_; }

  double operator()(Index i, Index j) const {
    return dense_mode_ ? dense_(i, j) : sparse_.coeff(i, j);
  }

  // Throws std::logic_error when the storage does not match.
  const Matrix& dense() const;
  const SparseMatrix& sparse() const;

  // Calls f(j, value) for every materialized entry of row i.
  template <class F>
  void for_each_in_row(Index i, F&& f) const {
    if (dense_mode_) {
      for (Index j = 0; j < dense_.cols(); ++j) f(j, dense_(i, j));
    } else {
      for (SparseMatrix::InnerIterator it(sparse_, i); it; ++it) f(it.col(), it.value());
    }
  }

  double max_asymmetry() const;

 private:
  bool dense_mode_ = true;
  Matrix dense_;
  SparseMatrix sparse_;
};

// Cosine similarity of unit-norm rows: S_v = E Eᵀ with an exact unit diagonal.
SimilarityMatrix visual_similarity(const Dataset& dataset);
Matrix visual_similarity(const Matrix& features);

// Cosine scores between two row sets (queries x gallery).
Matrix cross_similarity(const Matrix& a, const Matrix& b);

struct RerankParams {
  int k1 = 30;
  int k2 = 6;
  double lambda = 0.3;

  void validate(Index n) const;
};

// k-reciprocal encoded Jaccard distance blended with the normalized squared
// Euclidean distance: (1 - lambda) * jaccard + lambda * original. Output is
// dense, symmetric, in [0, 1] with a zero diagonal.
SimilarityMatrix kreciprocal_jaccard_distance(const Matrix& features, const RerankParams& params);
SimilarityMatrix kreciprocal_jaccard_distance(const Dataset& dataset, const RerankParams& params);

struct StHistogramParams {
  std::int64_t delta_t = 100;
  int max_bins = 200;
  double smoothing_eps = 1e-4;

  void validate() const;
};

// Per ordered camera pair, the distribution of time gaps between same-label
// record pairs, binned by delta_t. Pairs never observed hold the uniform
// distribution.
class StHistogram {
 public:
  StHistogram() = default;
  StHistogram(int num_cameras, std::int64_t delta_t, int max_bins);

  int num_cameras() const { return num_cameras_; }
  std::int64_t delta_t() const { return delta_t_; }
  int max_bins() const { return max_bins_; }

  int bin_of(std::int64_t time_gap) const;

  std::span<const double> pair(int ci, int cj) const;
  std::span<double> mutable_pair(int ci, int cj);
  double probability(int ci, int cj, int bin) const { return pair(ci, cj)[bin]; }

  // B(same | c_i, c_j, bin(|t_i - t_j|)) with overflow clamped to the last bin.
  double lookup(int ci, int cj, std::int64_t ti, std::int64_t tj) const;

  // Same-label pairs counted for the camera pair before smoothing.
  std::int64_t pair_count(int ci, int cj) const;
  void set_pair_count(int ci, int cj, std::int64_t count);

  nlohmann::json to_json() const;
  static StHistogram from_json(const nlohmann::json& j);

 private:
  std::size_t offset(int ci, int cj) const;

  int num_cameras_ = 0;
  std::int64_t delta_t_ = 1;
  int max_bins_ = 1;
  std::vector<double> bins_;
  std::vector<std::int64_t> counts_;
};

StHistogram fit_st_histogram(const Dataset& dataset, const LabelMatrix& labels,
                             const StHistogramParams& params);

double st_similarity(const StHistogram& hist, const ImageRecord& a, const ImageRecord& b);

// Dense N x N matrix of st_similarity over all record pairs.
Matrix st_similarity_matrix(const StHistogram& hist, const Dataset& dataset);

struct JointSimilarityParams {
  double lambda0 = 1.0;
  double gamma0 = 5.0;
  double lambda1_st = 2.0;
  double gamma1_st = 5.0;

  void validate() const;
};

inline double joint_score(double visual, double spatio_temporal, const JointSimilarityParams& p) {
  return 1.0 / (1.0 + p.lambda0 * std::exp(-p.gamma0 * visual)) /
         (1.0 + p.lambda1_st * std::exp(-p.gamma1_st * spatio_temporal));
}

// J = sigmoid(S_v) * sigmoid(S_st), elementwise.
SimilarityMatrix joint_similarity(const Matrix& visual, const Matrix& spatio_temporal,
                                  const JointSimilarityParams& params);

struct JointBuildOptions {
  Index dense_limit = 5000;  // above this N, J is stored top-k sparse
  int top_k = 200;
};

// Builds J directly from features and metadata without materializing S_st.
// Dense for N <= dense_limit, otherwise restricted to the union of every
// row's top_k visual neighbours (plus the diagonal).
SimilarityMatrix build_joint_similarity(const Matrix& features, const Dataset& dataset,
                                        const StHistogram& hist,
                                        const JointSimilarityParams& params,
                                        const JointBuildOptions& options = {});

}  // namespace hyperlabel
