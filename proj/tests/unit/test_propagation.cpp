#include <doctest.h>

#include <algorithm>
#include <numeric>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "hyperlabel/error.hpp"
#include "hyperlabel/evalkit.hpp"
#include "hyperlabel/propagation.hpp"

using namespace hyperlabel;

namespace {

struct Instance {
  SimilarityMatrix joint;
  Hypergraph graph;
};

Instance random_instance(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix j(n, n);
  for (Index a = 0; a < n; ++a) {
    j(a, a) = 1.0;
    for (Index b = a + 1; b < n; ++b) j(a, b) = j(b, a) = u(rng);
  }
  SimilarityMatrix joint(j);
  std::vector<Hyperedge> edges;
  std::uniform_int_distribution<int> size(2, 5);
  for (Index e = 0; e < n; ++e) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    Hyperedge h;
    h.members.assign(all.begin(), all.begin() + size(rng));
    std::sort(h.members.begin(), h.members.end());
    h.seed = h.members[0];
    edges.push_back(h);
  }
  Hypergraph g = merge(n, {edges}, joint);
  return {std::move(joint), std::move(g)};
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) y(i, labels[i]) = 1.0;
  }
  return y;
}

PropagationParams tight() {
  PropagationParams p;
  p.tol = 1e-14;
  p.max_iters = 20000;
  return p;
}

}  // namespace

TEST_SUITE("propagation") {

TEST_CASE("reliable selection") {
  Matrix j = Matrix::Constant(10, 10, 0.5);
  j.diagonal().setOnes();
  const LabelMatrix small({0, 0, 0, kNoise, 1, 1, 1, 1, 1, 1}, 2);
  const auto sel = select_reliable(small, SimilarityMatrix(j), 4);
  CHECK(sel.mask[0] + sel.mask[1] + sel.mask[2] == 3);
  CHECK(sel.mask[3] == 0);
  int big = 0;
  for (int i = 4; i < 10; ++i) big += sel.mask[i];
  CHECK(big == 4);
  CHECK(sel.y_reliable.sum() == 7.0);
  // Equal sums: ties go to the lower index.
  CHECK(sel.mask[4] + sel.mask[5] + sel.mask[6] + sel.mask[7] == 4);

  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance inst = random_instance(25, rng);
    std::vector<int> a(25);
    for (int& x : a) x = static_cast<int>(rng() % 4) - 1;
    const LabelMatrix labels = LabelMatrix::from_assignments(a);
    const auto got = select_reliable(labels, inst.joint, 3);
    for (const auto& members : labels.members()) {
      std::vector<std::pair<double, int>> s;
      for (int m : members) {
        double sum = 0.0;
        for (int o : members) sum += o == m ? 0.0 : inst.joint(m, o);
        s.emplace_back(-sum, m);
      }
      std::sort(s.begin(), s.end());
      for (std::size_t k = 0; k < s.size(); ++k) CHECK(got.mask[s[k].second] == (k < 3));
    }
  }
  CHECK_THROWS_AS(select_reliable(small, SimilarityMatrix(j), 0), ParameterError);
}

TEST_CASE("residual trivial cases") {
  std::mt19937_64 rng(51);
  const Instance inst = random_instance(8, rng);
  const Matrix y = one_hot({0, 1, 0, 1, 0, 1, 0, 1}, 2);
  const Matrix yr = one_hot({0, 0, 0, 1, 1, 1, 0, 1}, 2);
  const ReliableMask all(8, 1);
  const auto r = propagate_residual(inst.graph, y, yr, all, {});
  CHECK(r.error == y - yr);
  const ReliableMask some{1, 1, 0, 0, 0, 0, 0, 0};
  const auto z = propagate_residual(inst.graph, y, y, some, {});
  CHECK(z.error.isZero(0.0));
}

TEST_CASE("residual fixed point matches the pinned solve") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 6 + static_cast<Index>(rng() % 25);
    const Instance inst = random_instance(n, rng);
    const int classes = 3;
    std::vector<int> lab(n), rel(n);
    ReliableMask mask(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
      lab[i] = static_cast<int>(rng() % classes);
      mask[i] = rng() % 3 == 0 || i < 2;
      rel[i] = mask[i] ? static_cast<int>(rng() % classes) : -1;
    }
    const Matrix y = one_hot(lab, classes), yr = one_hot(rel, classes);
    const PropagationParams p = tight();
    const auto got = propagate_residual(inst.graph, y, yr, mask, p);
    CHECK(got.trace.converged);

    const Vector inv = inst.graph.vertex_degrees().cwiseSqrt().cwiseInverse();
    const Matrix s = p.alpha1 * inv.asDiagonal() * Matrix(inst.graph.adjacency()) * inv.asDiagonal();
    std::vector<Index> u, r;
    for (Index i = 0; i < n; ++i) (mask[i] ? r : u).push_back(i);
    Matrix suu(u.size(), u.size()), sur(u.size(), r.size()), er(r.size(), classes);
    for (std::size_t a = 0; a < u.size(); ++a) {
      for (std::size_t b = 0; b < u.size(); ++b) suu(a, b) = s(u[a], u[b]);
      for (std::size_t b = 0; b < r.size(); ++b) sur(a, b) = s(u[a], r[b]);
    }
    for (std::size_t b = 0; b < r.size(); ++b) er.row(b) = y.row(r[b]) - yr.row(r[b]);
    const Matrix eu = (Matrix::Identity(u.size(), u.size()) - suu).partialPivLu().solve(sur * er);
    double worst = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
      worst = std::max(worst, (got.error.row(u[a]) - eu.row(a)).cwiseAbs().maxCoeff());
    }
    for (std::size_t b = 0; b < r.size(); ++b) {
      // Pinned rows are copied, never recomputed.
      CHECK((got.error.row(r[b]) - er.row(b)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("correction") {
  std::mt19937_64 rng(53);
  const Matrix yr = Matrix::Random(5, 3), e = Matrix::Random(5, 3);
  CHECK(correct_labels(yr, e, 0.0) == yr);
  const Matrix c = correct_labels(yr, e, 0.7);
  for (Index i = 0; i < 5; ++i) {
    for (Index k = 0; k < 3; ++k) CHECK(c(i, k) == yr(i, k) + 0.7 * e(i, k));
  }
  const Matrix y = Matrix::Random(5, 3);
  CHECK(correct_labels(yr, y - yr, 1.0).isApprox(y));
  CHECK_THROWS_AS(correct_labels(yr, Matrix::Zero(4, 3), 1.0), ValidationError);
}

TEST_CASE("smoothing matches the closed form") {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 6 + static_cast<Index>(rng() % 25);
    const Instance inst = random_instance(n, rng);
    const Matrix yc = Matrix::Random(n, 4);
    const PropagationParams p = tight();
    const auto got = smooth_labels(inst.graph, yc, p);
    CHECK(got.trace.converged);
    const Matrix da = inst.graph.vertex_degrees().cwiseInverse().asDiagonal() *
                      Matrix(inst.graph.adjacency());
    const Matrix closed = (1.0 - p.alpha2) *
                          (Matrix::Identity(n, n) - p.alpha2 * da).partialPivLu().solve(yc);
    CHECK((got.soft - closed).cwiseAbs().maxCoeff() < 1e-6);

    // Geometric decrease of the iterate differences after burn-in.
    const auto& d = got.trace.deltas;
    const std::size_t start = d.size() / 5;
    for (std::size_t t = start + 1; t < d.size(); ++t) CHECK(d[t] <= d[t - 1] * (1.0 + 1e-9));
  }
}

TEST_CASE("smoothing limits and hard labels") {
  std::mt19937_64 rng(55);
  const Instance inst = random_instance(10, rng);
  const Matrix yc = Matrix::Random(10, 3).cwiseAbs();
  PropagationParams p;
  p.alpha2 = 1e-9;
  CHECK((smooth_labels(inst.graph, yc, p).soft - yc).cwiseAbs().maxCoeff() < 1e-8);

  // Two disconnected components with uniform labels.
  const SimilarityMatrix ones(Matrix::Ones(6, 6));
  const Hypergraph g = merge(6, {{{{0, 1, 2}, -1, {}}, {{3, 4, 5}, -1, {}}}}, ones);
  const Matrix y = one_hot({0, 0, 0, 1, 1, 1}, 2);
  const auto s = smooth_labels(g, y, PropagationParams{});
  CHECK(s.labels.assignments == std::vector<int>{0, 0, 0, 1, 1, 1});
  CHECK((s.soft - y).cwiseAbs().maxCoeff() < 1e-12);

  // Mass inside each component is conserved for row-stochastic inputs.
  Matrix mixed(6, 2);
  mixed << 0.3, 0.7, 1, 0, 0.5, 0.5, 0.2, 0.8, 0.9, 0.1, 0, 1;
  const auto m = smooth_labels(g, mixed, tight());
  CHECK(m.soft.topRows(3).sum() == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(m.soft.bottomRows(3).sum() == doctest::Approx(3.0).epsilon(1e-6));

  Matrix soft(4, 3);
  soft << 0.2, 0.2, 0.1, -1, 0, 0, 0, 0, 0.4, 0.1, 0.3, 0.3;
  std::vector<int> kept;
  const LabelMatrix h = harden(soft, &kept);
  CHECK(h.assignments == std::vector<int>{0, kNoise, 2, 1});
  CHECK(kept == std::vector<int>{0, 1, 2});
  Matrix gap(2, 3);
  gap << 0, 0, 1, 0, 0, 2;
  const LabelMatrix c = harden(gap, &kept);
  CHECK(c.assignments == std::vector<int>{0, 0});
  CHECK(c.n_clusters == 1);
  CHECK(kept == std::vector<int>{2});
}

TEST_CASE("parameter validation") {
  PropagationParams p;
  p.alpha1 = 1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.alpha2 = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.max_iters = 0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = {};
  p.tol = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("refinement repairs injected label noise") {
  int wins = 0;
  double gain = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(600 + seed);
    std::vector<int> truth;
    const Matrix f = testutil::blobs(10, 12, 16, 0.25, rng, &truth);
    const Index n = f.rows();
    const Matrix j = 0.5 * (f * f.transpose()).array() + 0.5;
    const SimilarityMatrix joint(j);
    const LabelMatrix clean(truth, 10);
    const auto sel = select_reliable(clean, joint, 4);
    std::vector<int> noisy = truth;
    std::vector<int> pool;
    for (Index i = 0; i < n; ++i) {
      if (!sel.mask[i]) pool.push_back(static_cast<int>(i));
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = 0; k < pool.size() / 5; ++k) {
      noisy[pool[k]] = (truth[pool[k]] + 1 + static_cast<int>(rng() % 9)) % 10;
    }
    const LabelMatrix labels(noisy, 10);
    const KnnIndex index(f * f.transpose(), 10);
    const std::vector<int> ks{5, 10};
    const Hypergraph g = merge(n, {edges_from_global_clustering(labels, joint),
                                   edges_from_global_knn(index, ks)}, joint);
    const PropagationParams p;
    const auto r = propagate_residual(g, labels.dense(), sel.y_reliable, sel.mask, p);
    const auto s = smooth_labels(g, correct_labels(sel.y_reliable, r.error, p.scale_s), p);
    const double before = pairwise_f1(noisy, truth);
    const double after = pairwise_f1(s.labels.assignments, truth);
    wins += after >= before;
    gain += after - before;
  }
  CHECK(wins >= 18);
  CHECK(gain > 0.0);
}

}  // TEST_SUITE
