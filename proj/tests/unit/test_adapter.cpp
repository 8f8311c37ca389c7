#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hyperlabel/adapter.hpp"
#include "hyperlabel/error.hpp"

using namespace hyperlabel;

TEST_SUITE("adapter") {

TEST_CASE("near identity initialization") {
  std::mt19937_64 rng(70);
  const Adapter a = Adapter::near_identity(6, 4, rng, 0.0);
  CHECK(a.weight() == Matrix::Identity(6, 4));
  CHECK(a.bias().isZero(0.0));
  const Adapter b = Adapter::near_identity(8, 8, rng);
  CHECK((b.weight() - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-2);
  const Matrix x = testutil::random_unit_rows(10, 8, rng);
  CHECK((b.embed(x) - x).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("forward output is unit norm") {
  std::mt19937_64 rng(71);
  Adapter a(Matrix::Random(5, 3), Vector::Random(3));
  const auto acts = a.forward(Matrix::Random(20, 5));
  for (Index i = 0; i < 20; ++i) CHECK(std::abs(acts.unit.row(i).norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(a.forward(Matrix::Random(2, 4)), ValidationError);
}

TEST_CASE("backward matches finite differences") {
  std::mt19937_64 rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    const Adapter base(Matrix::Random(6, 4), Vector::Random(4));
    const Matrix x = Matrix::Random(5, 6);
    const Matrix g = Matrix::Random(5, 4);
    const auto loss = [&](const Adapter& a) { return (a.embed(x).array() * g.array()).sum(); };
    const Vector analytic = Adapter::flatten(base.backward(x, base.forward(x), g));
    const Vector p = base.parameters();
    REQUIRE(p.size() == 6 * 4 + 4);
    Vector numeric(p.size());
    const double h = 1e-5;
    for (Index k = 0; k < p.size(); ++k) {
      Adapter plus = base, minus = base;
      Vector pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      plus.set_parameters(pp);
      minus.set_parameters(pm);
      numeric[k] = (loss(plus) - loss(minus)) / (2 * h);
    }
    CHECK(testutil::rel_error(Matrix(analytic), Matrix(numeric)) < 1e-6);
  }
}

TEST_CASE("normalize backward is a tangent projection") {
  std::mt19937_64 rng(73);
  const Matrix pre = Matrix::Random(4, 5) * 3.0;
  const Matrix unit = pre.rowwise().normalized();
  const Matrix g = Matrix::Random(4, 5);
  const Matrix back = normalize_backward(pre, unit, g);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(back.row(i).dot(unit.row(i))) < 1e-12);
    const Vector expect = (g.row(i) - unit.row(i) * unit.row(i).dot(g.row(i))) / pre.row(i).norm();
    CHECK((back.row(i).transpose() - expect).norm() < 1e-12);
  }
}

TEST_CASE("parameter layout") {
  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  Vector b(2);
  b << 5, 6;
  Adapter a(w, b);
  Vector expect(6);
  expect << 1, 2, 3, 4, 5, 6;
  CHECK(a.parameters() == expect);
  a.set_parameters(expect * 2);
  CHECK(a.weight()(1, 0) == 6.0);
  CHECK(a.bias()[1] == 12.0);
}

TEST_CASE("optimizer follows the moment recurrence") {
  AdamParams p;
  p.weight_decay = 0.01;
  AdamW opt(3, p);
  Vector theta(3);
  theta << 0.5, -1.0, 2.0;
  std::vector<double> t(theta.data(), theta.data() + 3), m(3, 0.0), v(3, 0.0);
  std::mt19937_64 rng(74);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int step = 1; step <= 25; ++step) {
    Vector g(3);
    for (int k = 0; k < 3; ++k) g[k] = gauss(rng);
    const double lr = step < 10 ? 1e-2 : 1e-3;
    opt.step(theta, g, lr);
    for (int k = 0; k < 3; ++k) {
      m[k] = 0.9 * m[k] + 0.1 * g[k];
      v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
      const double mh = m[k] / (1 - std::pow(0.9, step));
      const double vh = v[k] / (1 - std::pow(0.999, step));
      t[k] -= lr * (mh / (std::sqrt(vh) + 1e-8) + 0.01 * t[k]);
      CHECK(std::abs(theta[k] - t[k]) < 1e-14);
    }
  }
  CHECK(opt.steps() == 25);
}

TEST_CASE("save and load") {
  std::mt19937_64 rng(75);
  const Adapter a(Matrix::Random(5, 3), Vector::Random(3));
  const auto dir = testutil::temp_dir("adapter");
  a.save(dir / "adapter.bin");
  const Adapter b = Adapter::load(dir / "adapter.bin");
  CHECK(b.weight() == a.weight().cast<float>().cast<double>());
  CHECK(b.bias() == a.bias().cast<float>().cast<double>());
  b.save(dir / "again.bin");
  CHECK(Adapter::load(dir / "again.bin").weight() == b.weight());
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
