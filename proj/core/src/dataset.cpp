#include "hyperlabel/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

const char* to_string(LoadErrorKind kind) {
  switch (kind) {
    case LoadErrorKind::kIo: return "IoError";
    case LoadErrorKind::kMalformedHeader: return "MalformedHeader";
    case LoadErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case LoadErrorKind::kMalformedMetadata: return "MalformedMetadata";
    case LoadErrorKind::kNonNumericTimestamp: return "NonNumericTimestamp";
    case LoadErrorKind::kDuplicateIndex: return "DuplicateIndex";
    case LoadErrorKind::kMissingIndex: return "MissingIndex";
    case LoadErrorKind::kInvalidCamera: return "InvalidCamera";
    case LoadErrorKind::kZeroVector: return "ZeroVector";
  }
  return "LoadError";
}

ImageRecord Dataset::record(Index i) const {
  return ImageRecord{static_cast<int>(i),
                     std::span<const double>(embeddings.data() + i * dim(),
                                             static_cast<std::size_t>(dim())),
                     cameras[i], timestamps[i]};
}

void Dataset::validate() const {
  const auto n = static_cast<std::size_t>(size());
  if (cameras.size() != n || timestamps.size() != n) {
    throw ValidationError("dataset: camera/timestamp count does not match embeddings");
  }
  if (ground_truth && ground_truth->size() != n) {
    throw ValidationError("dataset: ground truth count does not match embeddings");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cameras[i] < 0 || cameras[i] >= num_cameras) {
      throw ValidationError("dataset: record " + std::to_string(i) + " has camera " +
                            std::to_string(cameras[i]) + " outside [0," +
                            std::to_string(num_cameras) + ")");
    }
    if (timestamps[i] < 0) {
      throw ValidationError("dataset: negative timestamp at record " + std::to_string(i));
    }
  }
  for (Index i = 0; i < size(); ++i) {
    const double norm = embeddings.row(i).norm();
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw ValidationError("dataset: embedding " + std::to_string(i) + " is not unit-norm");
    }
  }
}

Matrix normalize_rows(const Matrix& rows) {
  Matrix out(rows.rows(), rows.cols());
  for (Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw LoadError(LoadErrorKind::kZeroVector,
                      "embedding row " + std::to_string(i) + " cannot be normalized");
    }
    const double scale = std::abs(norm - 1.0) <= kUnitNormTolerance ? 1.0 : 1.0 / norm;
    for (Index j = 0; j < rows.cols(); ++j) {
      out(i, j) = static_cast<double>(static_cast<float>(rows(i, j) * scale));
    }
  }
  return out;
}

Dataset make_dataset(Matrix embeddings, std::vector<int> cameras,
                     std::vector<std::int64_t> timestamps,
                     std::optional<std::vector<int>> ground_truth, int num_cameras) {
  Dataset ds;
  ds.embeddings = normalize_rows(embeddings);
  ds.cameras = std::move(cameras);
  ds.timestamps = std::move(timestamps);
  ds.ground_truth = std::move(ground_truth);
  int max_camera = -1;
  for (int c : ds.cameras) max_camera = std::max(max_camera, c);
  ds.num_cameras = std::max(num_cameras, max_camera + 1);
  ds.validate();
  return ds;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> bytes = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                     static_cast<char>((v >> 16) & 0xff),
                                     static_cast<char>((v >> 24) & 0xff)};
  os.write(bytes.data(), 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

void write_f32_matrix(const std::filesystem::path& path, std::string_view magic,
                      const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(magic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Matrix read_f32_matrix(const std::filesystem::path& path, std::string_view magic) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 12 || std::string_view(bytes.data(), 4) != magic) {
    throw LoadError(LoadErrorKind::kMalformedHeader,
                    path.string() + ": expected magic " + std::string(magic));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = get_u32(p + 4);
  const std::uint32_t cols = get_u32(p + 8);
  const std::uint64_t payload = static_cast<std::uint64_t>(rows) * cols * 4;
  if (bytes.size() - 12 != payload) {
    throw LoadError(LoadErrorKind::kMalformedHeader,
                    path.string() + ": header declares " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " but payload has " +
                        std::to_string(bytes.size() - 12) + " bytes");
  }
  Matrix m(rows, cols);
  const unsigned char* q = p + 12;
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j, q += 4) {
      m(i, j) = static_cast<double>(std::bit_cast<float>(get_u32(q)));
    }
  }
  return m;
}

Dataset load_dataset(const std::filesystem::path& embeddings_path,
                     const std::filesystem::path& metadata_path) {
  Matrix raw = read_f32_matrix(embeddings_path, kEmbeddingMagic);
  const auto n = static_cast<std::size_t>(raw.rows());

  std::ifstream meta(metadata_path);
  if (!meta) throw LoadError(LoadErrorKind::kIo, "cannot open " + metadata_path.string());

  std::vector<int> cameras(n, -1);
  std::vector<std::int64_t> timestamps(n, 0);
  std::vector<int> identities(n, -1);
  std::vector<char> seen(n, 0);
  bool any_identity = false;
  std::size_t line_no = 0;
  std::size_t records = 0;
  std::string line;
  while (std::getline(meta, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++records;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(LoadErrorKind::kMalformedMetadata,
                      "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("index") || !obj.contains("camera") ||
        !obj.contains("timestamp")) {
      throw LoadError(LoadErrorKind::kMalformedMetadata,
                      "line " + std::to_string(line_no) +
                          ": expected object with index, camera, timestamp");
    }
    const auto& ts = obj["timestamp"];
    if (!ts.is_number_integer() || ts.get<std::int64_t>() < 0) {
      throw LoadError(LoadErrorKind::kNonNumericTimestamp,
                      "line " + std::to_string(line_no) + ": timestamp " + ts.dump());
    }
    if (!obj["index"].is_number_integer()) {
      throw LoadError(LoadErrorKind::kMalformedMetadata,
                      "line " + std::to_string(line_no) + ": non-integer index");
    }
    if (!obj["camera"].is_number_integer() || obj["camera"].get<std::int64_t>() < 0) {
      throw LoadError(LoadErrorKind::kInvalidCamera,
                      "line " + std::to_string(line_no) + ": camera " + obj["camera"].dump());
    }
    if (records > n) continue;  // reported as a count mismatch below
    const auto index = obj["index"].get<std::int64_t>();
    if (index < 0 || static_cast<std::size_t>(index) >= n) {
      throw LoadError(LoadErrorKind::kMissingIndex,
                      "line " + std::to_string(line_no) + ": index " + std::to_string(index) +
                          " outside [0," + std::to_string(n) + ")");
    }
    if (seen[index]) {
      throw LoadError(LoadErrorKind::kDuplicateIndex, "index " + std::to_string(index));
    }
    seen[index] = 1;
    cameras[index] = obj["camera"].get<int>();
    timestamps[index] = ts.get<std::int64_t>();
    if (obj.contains("identity") && !obj["identity"].is_null()) {
      identities[index] = obj["identity"].get<int>();
      any_identity = true;
    }
  }
  if (records != n) {
    throw LoadError(LoadErrorKind::kDimensionMismatch,
                    "embeddings have " + std::to_string(n) + " rows but metadata has " +
                        std::to_string(records) + " records");
  }
  std::optional<std::vector<int>> gt;
  if (any_identity) gt = std::move(identities);
  return make_dataset(std::move(raw), std::move(cameras), std::move(timestamps), std::move(gt));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& embeddings_path,
                  const std::filesystem::path& metadata_path) {
  write_f32_matrix(embeddings_path, kEmbeddingMagic, dataset.embeddings);
  std::ofstream out(metadata_path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + metadata_path.string());
  for (Index i = 0; i < dataset.size(); ++i) {
    nlohmann::ordered_json obj;
    obj["index"] = i;
    obj["camera"] = dataset.cameras[i];
    obj["timestamp"] = dataset.timestamps[i];
    if (dataset.ground_truth) obj["identity"] = (*dataset.ground_truth)[i];
    out << obj.dump() << '\n';
  }
}

Dataset load_dataset_dir(const std::filesystem::path& dir) {
  return load_dataset(dir / kEmbeddingsFile, dir / kMetadataFile);
}

void save_dataset_dir(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(dataset, dir / kEmbeddingsFile, dir / kMetadataFile);
}

LabelMatrix::LabelMatrix(std::vector<int> a, int k)
    : assignments(std::move(a)), n_clusters(k) {}

LabelMatrix LabelMatrix::from_assignments(std::vector<int> a) {
  int k = 0;
  for (int v : a) k = std::max(k, v + 1);
  return LabelMatrix(std::move(a), k);
}

Matrix LabelMatrix::dense() const {
  Matrix y = Matrix::Zero(size(), n_clusters);
  for (Index i = 0; i < size(); ++i) {
    if (assignments[i] != kNoise) y(i, assignments[i]) = 1.0;
  }
  return y;
}

std::vector<std::vector<int>> LabelMatrix::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != kNoise) out[assignments[i]].push_back(static_cast<int>(i));
  }
  return out;
}

LabelMatrix LabelMatrix::canonical() const {
  std::vector<int> remap(static_cast<std::size_t>(n_clusters), -1);
  std::vector<int> out(assignments.size(), kNoise);
  int next = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int c = assignments[i];
    if (c == kNoise) continue;
    if (remap[c] < 0) remap[c] = next++;
    out[i] = remap[c];
  }
  return LabelMatrix(std::move(out), next);
}

void LabelMatrix::validate() const {
  if (n_clusters < 0) throw ValidationError("labels: negative cluster count");
  std::vector<char> used(static_cast<std::size_t>(n_clusters), 0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int c = assignments[i];
    if (c == kNoise) continue;
    if (c < 0 || c >= n_clusters) {
      throw ValidationError("labels: record " + std::to_string(i) + " has cluster id " +
                            std::to_string(c) + " outside [0," + std::to_string(n_clusters) +
                            ")");
    }
    used[c] = 1;
  }
  for (int c = 0; c < n_clusters; ++c) {
    if (!used[c]) throw ValidationError("labels: cluster " + std::to_string(c) + " is empty");
  }
}

void save_labels(const LabelMatrix& labels, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["n_clusters"] = labels.n_clusters;
  j["assignments"] = labels.assignments;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

LabelMatrix load_labels(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("n_clusters") || !j.contains("assignments") ||
      !j["n_clusters"].is_number_integer() || !j["assignments"].is_array()) {
    throw ValidationError(path.string() + ": expected {\"n_clusters\", \"assignments\"}");
  }
  std::vector<int> a;
  a.reserve(j["assignments"].size());
  for (const auto& v : j["assignments"]) {
    if (!v.is_number_integer()) throw ValidationError(path.string() + ": non-integer assignment");
    a.push_back(v.get<int>());
  }
  LabelMatrix labels(std::move(a), j["n_clusters"].get<int>());
  labels.validate();
  return labels;
}

}  // namespace hyperlabel
