#pragma once

#include <cstdint>
#include <vector>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/hypergraph.hpp"
#include "hyperlabel/similarity.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct PropagationParams {
  double alpha1 = 0.99;  // residual diffusion
  double alpha2 = 0.9;   // label smoothing
  double scale_s = 1.0;
  int reliable_per_cluster = 4;
  int max_iters = 50;
  double tol = 1e-6;

  void validate() const;
};

using ReliableMask = std::vector<std::uint8_t>;

struct ReliableSelection {
  ReliableMask mask;
  Matrix y_reliable;  // one-hot on reliable rows, zero elsewhere
};

// Per cluster, the members with the highest summed J to their co-members
// (ties to lower index). Noise records are never reliable.
ReliableSelection select_reliable(const LabelMatrix& labels, const SimilarityMatrix& joint,
                                  int per_cluster);

struct IterationTrace {
  int iterations = 0;
  bool converged = false;
  std::vector<double> deltas;  // max-abs change per iteration
};

struct ResidualResult {
  Matrix error;
  IterationTrace trace;
};

// E_u <- alpha1 [D^-1/2 A D^-1/2 E]_u with reliable rows pinned to Y - Y_r,
// starting from E_u = 0.
ResidualResult propagate_residual(const Hypergraph& graph, const Matrix& y, const Matrix& y_reliable,
                                  const ReliableMask& reliable, const PropagationParams& params);

// Y_r + s * E.
Matrix correct_labels(const Matrix& y_reliable, const Matrix& error, double scale_s);

struct SmoothResult {
  Matrix soft;                      // N x N_c before compaction
  LabelMatrix labels;               // argmax, compacted cluster ids
  std::vector<int> kept_clusters;   // original column of each compacted id
  IterationTrace trace;
};

// Y <- (1 - alpha2) Y_c + alpha2 D^-1 A Y from Y = Y_c. Rows whose entries are
// all <= 0 become noise; clusters that end up empty are dropped.
SmoothResult smooth_labels(const Hypergraph& graph, const Matrix& y_corrected,
                           const PropagationParams& params);

// Hard labels from a soft matrix: row argmax (ties to lower class), noise for
// rows without a positive entry, then compaction.
LabelMatrix harden(const Matrix& soft, std::vector<int>* kept_clusters = nullptr);

}  // namespace hyperlabel
