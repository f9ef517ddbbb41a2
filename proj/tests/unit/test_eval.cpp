#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "m3mix/data_io.hpp"
#include "m3mix/eval.hpp"
#include "m3mix/experiments.hpp"
#include "m3mix/infinite_m3.hpp"

using namespace m3mix;

TEST_CASE("perplexity of a uniform model is the vocabulary size") {
  const double v = 100.0;
  for (std::size_t n : {1, 7, 250}) {
    const std::vector<double> ll{-static_cast<double>(n) * std::log(v)};
    const std::vector<std::size_t> len{n};
    CHECK(perplexity(ll, len) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("perplexity formula") {
  const std::vector<double> ll{-2.0, -3.0};
  const std::vector<std::size_t> len{2, 3};
  CHECK(perplexity(ll, len) == doctest::Approx(std::numbers::e).epsilon(1e-14));
  const std::vector<double> ll3{-6.0, -9.0};
  const std::vector<std::size_t> len3{6, 9};
  CHECK(perplexity(ll3, len3) == doctest::Approx(perplexity(ll, len)).epsilon(1e-14));
  CHECK_THROWS(perplexity(std::vector<double>{}, std::vector<std::size_t>{}));
  CHECK_THROWS(perplexity(ll, std::vector<std::size_t>{2}));
  CHECK_THROWS(perplexity(ll, std::vector<std::size_t>{2, 0}));
}

TEST_CASE("nmi reference values") {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1}, c{0, 0, 1, 0};
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  CHECK(std::abs(nmi(a, b)) < 1e-15);
  CHECK(nmi(a, c) == doctest::Approx(0.3456).epsilon(1e-4 / 0.3456));
  const std::vector<int> one(4, 0), alsoOne(4, 3);
  CHECK(nmi(one, alsoOne) == 1.0);
  CHECK(nmi(one, a) == 0.0);
  CHECK_THROWS(nmi(a, std::vector<int>{0, 1}));
}

TEST_CASE("nmi is symmetric and invariant to relabeling") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 60;
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = static_cast<int>(gen() % 4);
    for (auto& x : b) x = static_cast<int>(gen() % 5);
    const double v = nmi(a, b);
    REQUIRE(std::abs(v - nmi(b, a)) < 1e-14);
    std::vector<int> perm{7, 3, 11, 0, 5};
    std::vector<int> pb(n);
    for (std::size_t i = 0; i < n; ++i) pb[i] = perm[b[i]];
    REQUIRE(std::abs(nmi(a, pb) - v) < 1e-14);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("co-clustering matrix") {
  const std::vector<int> truth{1, 0, 1, 0};
  SUBCASE("one run, one cluster") {
    const std::vector<std::vector<int>> runs{{5, 5, 5, 5}};
    CHECK(coClusterMatrix(runs, truth).frequency.isOnes());
  }
  SUBCASE("one run equal to the truth is block diagonal") {
    const std::vector<std::vector<int>> runs{truth};
    const CoClusterMatrix m = coClusterMatrix(runs, truth);
    CHECK(m.order == std::vector<std::size_t>{1, 3, 0, 2});
    Matrix want(4, 4);
    want << 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1;
    CHECK(m.frequency == want);
  }
  SUBCASE("a pair together in one of two runs") {
    const std::vector<std::vector<int>> runs{{0, 1, 2, 3}, {0, 1, 0, 3}};
    const CoClusterMatrix m = coClusterMatrix(runs, truth);
    // original points 0 and 2 sit at positions 2 and 3
    CHECK(m.frequency(2, 3) == 0.5);
    CHECK(m.frequency(3, 2) == 0.5);
    CHECK(m.frequency.diagonal().isOnes());
  }
}

TEST_CASE("density grid of a single Gaussian") {
  Vector mean(2);
  mean << 0.7, -1.1;
  Matrix cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.5;
  const auto dens = [&](const Vector& x) { return std::exp(logDensity(x, mean, cov)); };
  const double sx = 1.0, sy = std::sqrt(0.5);
  const GridBounds b{{mean(0) - 6 * sx, mean(1) - 6 * sy}, {mean(0) + 6 * sx, mean(1) + 6 * sy}};
  const DensityGrid g = densityGrid(dens, b, 121);
  const auto am = g.argmax();
  const double cellX = 12 * sx / 120, cellY = 12 * sy / 120;
  CHECK(std::abs(am[0] - mean(0)) <= cellX);
  CHECK(std::abs(am[1] - mean(1)) <= cellY);
  CHECK(std::abs(g.integral() - 1.0) < 0.02);
  CHECK(g.countPeaks() == 1);
  CHECK_THROWS(densityGrid(dens, b, 1));
  CHECK_THROWS(densityGrid(dens, GridBounds{{0, 0, 0}, {1, 1, 1}}, 10));
}

TEST_CASE("density grid in one dimension") {
  const auto dens = [](const Vector& x) {
    return 0.5 * std::exp(logDensity(x, Vector::Constant(1, -3.0), Matrix::Identity(1, 1))) +
           0.5 * std::exp(logDensity(x, Vector::Constant(1, 3.0), Matrix::Identity(1, 1)));
  };
  const DensityGrid g = densityGrid(dens, GridBounds{{-10}, {10}}, 401);
  CHECK(g.countPeaks() == 2);
  CHECK(std::abs(g.integral() - 1.0) < 1e-3);
}

TEST_CASE("predictive density peaks match the generating mixture on factorial data") {
  const PointCloud c = genFactorialGaussians(defaultFactorialMeans(), defaultFactorialCovariances(), 100, 101);
  std::vector<Vector> mu;
  std::vector<Matrix> cov;
  for (int k = 0; k < 10; ++k) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < c.points.rows(); ++i)
      if ((*c.labels)[static_cast<std::size_t>(i)] == k) idx.push_back(i);
    Matrix x(static_cast<Eigen::Index>(idx.size()), 2);
    for (std::size_t j = 0; j < idx.size(); ++j) x.row(static_cast<Eigen::Index>(j)) = c.points.row(idx[j]);
    const Vector m = x.colwise().mean().transpose();
    const Matrix z = x.rowwise() - m.transpose();
    mu.push_back(m);
    cov.push_back(z.transpose() * z / static_cast<double>(idx.size() - 1));
  }
  const GridBounds b{{c.points.col(0).minCoeff() - 2, c.points.col(1).minCoeff() - 2},
                     {c.points.col(0).maxCoeff() + 2, c.points.col(1).maxCoeff() + 2}};
  const DensityGrid truth = densityGrid(
      [&](const Vector& x) {
        double a = 0.0;
        for (int k = 0; k < 10; ++k) a += std::exp(logDensity(x, mu[k], cov[k])) / 10.0;
        return a;
      },
      b, 200);
  const experiments::GaussianSettings s;
  const ChainResult r = runChain(std::make_shared<const Matrix>(c.points), experiments::chainConfig(c.points, 1, s));
  const DensityGrid model = densityGrid([&](const Vector& x) { return predictiveDensity(r.samples, x); }, b, 200);
  // concentric pairs have a single mode each
  CHECK(truth.countPeaks() == 5);
  CHECK(model.countPeaks() == truth.countPeaks());
}
