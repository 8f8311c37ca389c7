#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/types.hpp"

namespace testutil {

using hyperlabel::Index;
using hyperlabel::Matrix;
using hyperlabel::Vector;

inline Matrix random_unit_rows(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) m(i, k) = g(rng);
    m.row(i).normalize();
  }
  return m;
}

inline Vector random_unit(Index d, std::mt19937_64& rng) {
  return random_unit_rows(1, d, rng).row(0).transpose();
}

// Blobs around random centers, unit-normalized.
inline Matrix blobs(int clusters, int per_cluster, Index d, double spread, std::mt19937_64& rng,
                    std::vector<int>* truth = nullptr) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix centers = random_unit_rows(clusters, d, rng);
  Matrix m(static_cast<Index>(clusters) * per_cluster, d);
  if (truth) truth->clear();
  for (int c = 0; c < clusters; ++c) {
    for (int p = 0; p < per_cluster; ++p) {
      const Index r = static_cast<Index>(c) * per_cluster + p;
      for (Index k = 0; k < d; ++k) m(r, k) = centers(c, k) + spread * g(rng);
      m.row(r).normalize();
      if (truth) truth->push_back(c);
    }
  }
  return m;
}

inline hyperlabel::Dataset random_dataset(Index n, Index d, int cameras, std::mt19937_64& rng,
                                          std::int64_t horizon = 10000) {
  std::uniform_int_distribution<int> cam(0, cameras - 1);
  std::uniform_int_distribution<std::int64_t> t(0, horizon);
  std::vector<int> cams(static_cast<std::size_t>(n));
  std::vector<std::int64_t> times(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    cams[i] = cam(rng);
    times[i] = t(rng);
  }
  return hyperlabel::make_dataset(random_unit_rows(n, d, rng), cams, times, std::nullopt, cameras);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  static std::mt19937_64 rng(static_cast<std::uint64_t>(
      std::chrono::steady_clock::now().time_since_epoch().count()));
  auto dir = std::filesystem::temp_directory_path() /
             ("hyperlabel_test_" + name + "_" + std::to_string(rng() % 1000000007));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

inline double rel_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({1e-8, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testutil
