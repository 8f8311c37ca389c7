#include "hyperlabel/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

SimilarityMatrix::SimilarityMatrix(Matrix dense) : dense_mode_(true), dense_(std::move(dense)) {
  if (dense_.rows() != dense_.cols()) throw ValidationError("similarity matrix must be square");
}

SimilarityMatrix::SimilarityMatrix(SparseMatrix sparse)
    : dense_mode_(false), sparse_(std::move(sparse)) {
  if (sparse_.rows() != sparse_.cols()) throw ValidationError("similarity matrix must be square");
  sparse_.makeCompressed();
}

const Matrix& SimilarityMatrix::dense() const {
  if (!dense_mode_) throw std::logic_error("SimilarityMatrix: dense() on sparse storage");
  return dense_;
}

const SparseMatrix& SimilarityMatrix::sparse() const {
  if (dense_mode_) throw std::logic_error("SimilarityMatrix: sparse() on dense storage");
  return sparse_;
}

double SimilarityMatrix::max_asymmetry() const {
  double worst = 0.0;
  if (dense_mode_) {
    return (dense_ - dense_.transpose()).cwiseAbs().maxCoeff();
  }
  for (Index i = 0; i < sparse_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(sparse_, i); it; ++it) {
      worst = std::max(worst, std::abs(it.value() - sparse_.coeff(it.col(), i)));
    }
  }
  return worst;
}

Matrix visual_similarity(const Matrix& features) {
  const Index n = features.rows();
  Matrix s = features * features.transpose();
  for (Index i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) s(j, i) = s(i, j);
  }
  return s;
}

SimilarityMatrix visual_similarity(const Dataset& dataset) {
  return SimilarityMatrix(visual_similarity(dataset.embeddings));
}

Matrix cross_similarity(const Matrix& a, const Matrix& b) { return a * b.transpose(); }

void RerankParams::validate(Index n) const {
  if (k2 < 1 || k1 < k2) {
    throw ParameterError("rerank: require k1 >= k2 >= 1 (k1=" + std::to_string(k1) +
                         ", k2=" + std::to_string(k2) + ")");
  }
  if (k1 >= n) {
    throw ParameterError("rerank: k1=" + std::to_string(k1) + " must be < N=" + std::to_string(n));
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ParameterError("rerank: lambda outside [0,1]");
}

namespace {

using SparseRow = std::vector<std::pair<int, double>>;  // sorted by column

// Neighbours of i that list i among their own first k+1 entries.
std::vector<int> k_reciprocal(const std::vector<std::vector<int>>& rank, int i, int k) {
  std::vector<int> out;
  const auto& forward = rank[i];
  for (int f = 0; f <= k; ++f) {
    const int cand = forward[f];
    const auto& back = rank[cand];
    if (std::find(back.begin(), back.begin() + k + 1, i) != back.begin() + k + 1) {
      out.push_back(cand);
    }
  }
  return out;
}

}  // namespace

SimilarityMatrix kreciprocal_jaccard_distance(const Matrix& features, const RerankParams& params) {
  const Index n = features.rows();
  params.validate(n);
  const int k1 = params.k1;
  const int k2 = params.k2;
  const int half = static_cast<int>(std::nearbyint(k1 / 2.0));  // half-to-even

  Matrix dist = visual_similarity(features);
  dist = (2.0 - 2.0 * dist.array()).max(0.0).matrix();
  dist.diagonal().setZero();
  const double max_dist = dist.maxCoeff();
  if (max_dist > 0.0) dist /= max_dist;

  // First k1+1 entries of each row's ascending ranking (ties by index).
  std::vector<std::vector<int>> rank(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto by_distance = [&](int a, int b) {
      return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + k1 + 1, order.end(), by_distance);
    order.resize(static_cast<std::size_t>(k1) + 1);
    rank[i] = std::move(order);
  }

  std::vector<SparseRow> v(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const std::vector<int> base = k_reciprocal(rank, static_cast<int>(i), k1);
    std::vector<int> expanded = base;
    for (int cand : base) {
      const std::vector<int> cand_set = k_reciprocal(rank, cand, half);
      std::size_t shared = 0;
      for (int c : cand_set) {
        if (std::find(base.begin(), base.end(), c) != base.end()) ++shared;
      }
      if (static_cast<double>(shared) > 2.0 / 3.0 * static_cast<double>(cand_set.size())) {
        expanded.insert(expanded.end(), cand_set.begin(), cand_set.end());
      }
    }
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());
    double total = 0.0;
    SparseRow row;
    row.reserve(expanded.size());
    for (int j : expanded) {
      const double w = std::exp(-dist(i, j));
      row.emplace_back(j, w);
      total += w;
    }
    for (auto& e : row) e.second /= total;
    v[i] = std::move(row);
  }

  if (k2 != 1) {
    std::vector<SparseRow> expanded(static_cast<std::size_t>(n));
#pragma omp parallel
    {
      std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
      std::vector<int> touched;
#pragma omp for schedule(static)
      for (Index i = 0; i < n; ++i) {
        touched.clear();
        for (int r = 0; r < k2; ++r) {
          for (const auto& [col, val] : v[rank[i][r]]) {
            if (acc[col] == 0.0) touched.push_back(col);
            acc[col] += val;
          }
        }
        std::sort(touched.begin(), touched.end());
        SparseRow row;
        row.reserve(touched.size());
        for (int col : touched) {
          row.emplace_back(col, acc[col] / k2);
          acc[col] = 0.0;
        }
        expanded[i] = std::move(row);
      }
    }
    v = std::move(expanded);
  }

  std::vector<std::vector<std::pair<int, double>>> inverted(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (const auto& [col, val] : v[i]) inverted[col].emplace_back(static_cast<int>(i), val);
  }

  Matrix out(n, n);
#pragma omp parallel
  {
    std::vector<double> shared(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
    for (Index i = 0; i < n; ++i) {
      std::fill(shared.begin(), shared.end(), 0.0);
      for (const auto& [col, val] : v[i]) {
        for (const auto& [j, other] : inverted[col]) shared[j] += std::min(val, other);
      }
      for (Index j = 0; j < n; ++j) {
        const double jaccard = 1.0 - shared[j] / (2.0 - shared[j]);
        out(i, j) = (1.0 - params.lambda) * jaccard + params.lambda * dist(i, j);
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double sym = std::clamp(0.5 * (out(i, j) + out(j, i)), 0.0, 1.0);
      out(i, j) = sym;
      out(j, i) = sym;
    }
  }
  return SimilarityMatrix(std::move(out));
}

SimilarityMatrix kreciprocal_jaccard_distance(const Dataset& dataset, const RerankParams& params) {
  return kreciprocal_jaccard_distance(dataset.embeddings, params);
}

void StHistogramParams::validate() const {
  if (delta_t < 1) throw ParameterError("histogram: delta_t must be >= 1 frame");
  if (max_bins < 1) throw ParameterError("histogram: max_bins must be >= 1");
  if (!(smoothing_eps >= 0.0)) throw ParameterError("histogram: smoothing_eps must be >= 0");
}

StHistogram::StHistogram(int num_cameras, std::int64_t delta_t, int max_bins)
    : num_cameras_(num_cameras),
      delta_t_(delta_t),
      max_bins_(max_bins),
      bins_(static_cast<std::size_t>(num_cameras) * num_cameras * max_bins, 1.0 / max_bins),
      counts_(static_cast<std::size_t>(num_cameras) * num_cameras, 0) {}

std::size_t StHistogram::offset(int ci, int cj) const {
  if (ci < 0 || cj < 0 || ci >= num_cameras_ || cj >= num_cameras_) {
    throw ValidationError("histogram: camera pair (" + std::to_string(ci) + "," +
                          std::to_string(cj) + ") outside [0," + std::to_string(num_cameras_) +
                          ")");
  }
  return (static_cast<std::size_t>(ci) * num_cameras_ + cj) * max_bins_;
}

int StHistogram::bin_of(std::int64_t time_gap) const {
  const std::int64_t gap = time_gap < 0 ? -time_gap : time_gap;
  return static_cast<int>(std::min<std::int64_t>(gap / delta_t_, max_bins_ - 1));
}

std::span<const double> StHistogram::pair(int ci, int cj) const {
  return {bins_.data() + offset(ci, cj), static_cast<std::size_t>(max_bins_)};
}

std::span<double> StHistogram::mutable_pair(int ci, int cj) {
  return {bins_.data() + offset(ci, cj), static_cast<std::size_t>(max_bins_)};
}

double StHistogram::lookup(int ci, int cj, std::int64_t ti, std::int64_t tj) const {
  return pair(ci, cj)[bin_of(ti - tj)];
}

std::int64_t StHistogram::pair_count(int ci, int cj) const {
  return counts_[offset(ci, cj) / max_bins_];
}

void StHistogram::set_pair_count(int ci, int cj, std::int64_t count) {
  counts_[offset(ci, cj) / max_bins_] = count;
}

nlohmann::json StHistogram::to_json() const {
  nlohmann::ordered_json j;
  j["delta_t"] = delta_t_;
  j["max_bins"] = max_bins_;
  j["num_cameras"] = num_cameras_;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::object();
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (int a = 0; a < num_cameras_; ++a) {
    for (int b = 0; b < num_cameras_; ++b) {
      const std::string key = std::to_string(a) + "-" + std::to_string(b);
      const auto p = pair(a, b);
      pairs[key] = std::vector<double>(p.begin(), p.end());
      counts[key] = pair_count(a, b);
    }
  }
  j["pairs"] = std::move(pairs);
  j["counts"] = std::move(counts);
  return nlohmann::json::parse(j.dump());
}

StHistogram StHistogram::from_json(const nlohmann::json& j) {
  try {
    StHistogram h(j.at("num_cameras").get<int>(), j.at("delta_t").get<std::int64_t>(),
                  j.at("max_bins").get<int>());
    for (int a = 0; a < h.num_cameras_; ++a) {
      for (int b = 0; b < h.num_cameras_; ++b) {
        const std::string key = std::to_string(a) + "-" + std::to_string(b);
        const auto values = j.at("pairs").at(key).get<std::vector<double>>();
        if (values.size() != static_cast<std::size_t>(h.max_bins_)) {
          throw ValidationError("histogram: pair " + key + " has wrong bin count");
        }
        std::copy(values.begin(), values.end(), h.mutable_pair(a, b).begin());
        if (j.contains("counts")) h.set_pair_count(a, b, j["counts"].at(key).get<std::int64_t>());
      }
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("histogram json: ") + e.what());
  }
}

StHistogram fit_st_histogram(const Dataset& dataset, const LabelMatrix& labels,
                             const StHistogramParams& params) {
  params.validate();
  if (labels.size() == 0) throw ParameterError("histogram: labels are empty");
  if (labels.size() != dataset.size()) {
    throw ValidationError("histogram: labels and dataset differ in size");
  }
  const int cams = dataset.num_cameras;
  const int bins = params.max_bins;
  StHistogram hist(cams, params.delta_t, bins);

  std::vector<double> counts(static_cast<std::size_t>(cams) * cams * bins, 0.0);
  std::vector<std::int64_t> totals(static_cast<std::size_t>(cams) * cams, 0);
  const auto add = [&](int a, int b, int bin) {
    counts[(static_cast<std::size_t>(a) * cams + b) * bins + bin] += 1.0;
    totals[static_cast<std::size_t>(a) * cams + b] += 1;
  };
  for (const auto& members : labels.members()) {
    for (std::size_t x = 0; x < members.size(); ++x) {
      const int i = members[x];
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        const int j = members[y];
        const int bin = hist.bin_of(dataset.timestamps[i] - dataset.timestamps[j]);
        const int ci = dataset.cameras[i];
        const int cj = dataset.cameras[j];
        add(ci, cj, bin);
        if (ci != cj) add(cj, ci, bin);
      }
    }
  }

  for (int a = 0; a < cams; ++a) {
    for (int b = 0; b < cams; ++b) {
      const std::size_t pair_index = static_cast<std::size_t>(a) * cams + b;
      hist.set_pair_count(a, b, totals[pair_index]);
      if (totals[pair_index] == 0) continue;  // stays uniform
      auto out = hist.mutable_pair(a, b);
      const double* in = counts.data() + pair_index * bins;
      double total = 0.0;
      for (int k = 0; k < bins; ++k) total += in[k] + params.smoothing_eps;
      for (int k = 0; k < bins; ++k) out[k] = (in[k] + params.smoothing_eps) / total;
    }
  }
  return hist;
}

double st_similarity(const StHistogram& hist, const ImageRecord& a, const ImageRecord& b) {
  return hist.lookup(a.camera, b.camera, a.timestamp, b.timestamp);
}

Matrix st_similarity_matrix(const StHistogram& hist, const Dataset& dataset) {
  const Index n = dataset.size();
  Matrix s(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double v = hist.lookup(dataset.cameras[i], dataset.cameras[j], dataset.timestamps[i],
                                   dataset.timestamps[j]);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

void JointSimilarityParams::validate() const {
  if (!(gamma0 > 0.0) || !(gamma1_st > 0.0)) {
    throw ParameterError("joint similarity: gamma0 and gamma1_st must be > 0");
  }
  if (!(lambda0 >= 0.0) || !(lambda1_st >= 0.0)) {
    throw ParameterError("joint similarity: lambda0 and lambda1_st must be >= 0");
  }
}

SimilarityMatrix joint_similarity(const Matrix& visual, const Matrix& spatio_temporal,
                                  const JointSimilarityParams& params) {
  params.validate();
  if (visual.rows() != spatio_temporal.rows() || visual.cols() != spatio_temporal.cols()) {
    throw ValidationError("joint similarity: S_v and S_st differ in shape");
  }
  Matrix j(visual.rows(), visual.cols());
  for (Index r = 0; r < j.rows(); ++r) {
    for (Index c = 0; c < j.cols(); ++c) {
      j(r, c) = joint_score(visual(r, c), spatio_temporal(r, c), params);
    }
  }
  return SimilarityMatrix(std::move(j));
}

SimilarityMatrix build_joint_similarity(const Matrix& features, const Dataset& dataset,
                                        const StHistogram& hist,
                                        const JointSimilarityParams& params,
                                        const JointBuildOptions& options) {
  params.validate();
  const Index n = features.rows();
  if (n != dataset.size()) throw ValidationError("joint similarity: feature/dataset size mismatch");
  const auto pair_score = [&](Index i, Index j, double visual) {
    const double st = hist.lookup(dataset.cameras[i], dataset.cameras[j], dataset.timestamps[i],
                                  dataset.timestamps[j]);
    return joint_score(visual, st, params);
  };

  if (n <= options.dense_limit) {
    const Matrix sv = visual_similarity(features);
    Matrix j(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Index r = 0; r < n; ++r) {
      for (Index c = r; c < n; ++c) j(r, c) = pair_score(r, c, sv(r, c));
    }
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < r; ++c) j(r, c) = j(c, r);
    }
    return SimilarityMatrix(std::move(j));
  }

  const int k = static_cast<int>(std::min<Index>(options.top_k, n - 1));
  std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < n; ++r) {
    const Vector scores = features * features.row(r).transpose();
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(n - 1));
    for (Index c = 0; c < n; ++c) {
      if (c != r) order.push_back(static_cast<int>(c));
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });
    order.resize(static_cast<std::size_t>(k));
    neighbours[r] = std::move(order);
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (2 * k + 1));
  for (Index r = 0; r < n; ++r) {
    triplets.emplace_back(r, r, pair_score(r, r, 1.0));
    for (int c : neighbours[r]) {
      const double v = pair_score(r, c, features.row(r).dot(features.row(c)));
      triplets.emplace_back(r, c, v);
      triplets.emplace_back(c, r, v);
    }
  }
  SparseMatrix j(n, n);
  // Entries inserted from both endpoints are equal; keep one copy.
  j.setFromTriplets(triplets.begin(), triplets.end(), [](double a, double) { return a; });
  return SimilarityMatrix(std::move(j));
}

}  // namespace hyperlabel
