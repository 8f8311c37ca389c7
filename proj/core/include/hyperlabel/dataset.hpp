#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hyperlabel/types.hpp"

namespace hyperlabel {

inline constexpr int kNoise = -1;

// Tolerance on ‖e‖ below which a stored row counts as already normalized.
inline constexpr double kUnitNormTolerance = 1e-6;

// Read-only view of one record of a Dataset.
struct ImageRecord {
  int index = 0;
  std::span<const double> embedding;
  int camera = 0;
  std::int64_t timestamp = 0;
};

// N embeddings with per-record camera and frame timestamp. Embedding values
// are L2-normalized and exactly representable as 32-bit floats, so that
// writing and re-reading a dataset is bit-exact.
struct Dataset {
  Matrix embeddings;  // N x d
  std::vector<int> cameras;
  std::vector<std::int64_t> timestamps;
  std::optional<std::vector<int>> ground_truth;
  std::optional<double> frame_rate_hint;
  int num_cameras = 0;

  Index size() const { return embeddings.rows(); }
  Index dim() const { return embeddings.cols(); }
  ImageRecord record(Index i) const;

  // Throws ValidationError when an invariant is broken.
  void validate() const;
};

// Normalizes rows (throwing LoadError/kZeroVector on a zero row), rounds them
// to float precision and derives num_cameras as max(camera) + 1 unless a larger
// count is given.
Dataset make_dataset(Matrix embeddings, std::vector<int> cameras,
                     std::vector<std::int64_t> timestamps,
                     std::optional<std::vector<int>> ground_truth = std::nullopt,
                     int num_cameras = 0);

// Row-wise L2 normalization with float rounding. Rows already unit-norm within
// kUnitNormTolerance are only rounded, which keeps re-ingestion idempotent.
Matrix normalize_rows(const Matrix& rows);

// Binary matrix container: 4-byte magic, u32 rows, u32 cols, rows*cols f32,
// all little-endian. ".emb" files use the magic "HLEM".
inline constexpr std::string_view kEmbeddingMagic = "HLEM";
inline constexpr std::string_view kAdapterMagic = "HLAD";

void write_f32_matrix(const std::filesystem::path& path, std::string_view magic,
                      const Matrix& m);
Matrix read_f32_matrix(const std::filesystem::path& path, std::string_view magic);

Dataset load_dataset(const std::filesystem::path& embeddings_path,
                     const std::filesystem::path& metadata_path);
void save_dataset(const Dataset& dataset, const std::filesystem::path& embeddings_path,
                  const std::filesystem::path& metadata_path);

// Conventional file names inside a data directory.
inline constexpr std::string_view kEmbeddingsFile = "embeddings.emb";
inline constexpr std::string_view kMetadataFile = "metadata.jsonl";

Dataset load_dataset_dir(const std::filesystem::path& dir);
void save_dataset_dir(const Dataset& dataset, const std::filesystem::path& dir);

// Hard cluster assignment per record; kNoise marks unclustered records.
struct LabelMatrix {
  std::vector<int> assignments;
  int n_clusters = 0;

  LabelMatrix() = default;
  LabelMatrix(std::vector<int> assignments, int n_clusters);

  // n_clusters = max(assignment) + 1.
  static LabelMatrix from_assignments(std::vector<int> assignments);

  Index size() const { return static_cast<Index>(assignments.size()); }
  bool is_noise(Index i) const { return assignments[i] == kNoise; }

  // N x N_c one-hot matrix; noise rows are all zero.
  Matrix dense() const;

  // members()[c] lists record indices of cluster c in ascending order.
  std::vector<std::vector<int>> members() const;

  // Relabels so that ids follow first appearance and empty ids disappear.
  LabelMatrix canonical() const;

  void validate() const;

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;
};

// {"n_clusters": int, "assignments": [int]}
void save_labels(const LabelMatrix& labels, const std::filesystem::path& path);
LabelMatrix load_labels(const std::filesystem::path& path);

}  // namespace hyperlabel
