#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/fuzz.hpp"
#include "m3mix/optim.hpp"

using namespace m3mix;
using namespace m3mix::optim;

using fuzz::randomSpd;
using fuzz::rosenbrock;

TEST_CASE("lbfgs solves a shifted sphere in a few iterations") {
  Vector a(3);
  a << 1.0, -2.0, 0.5;
  const ObjectiveFn f = [&](const Vector& x, Vector& g) {
    g = 2.0 * (x - a);
    return (x - a).squaredNorm();
  };
  const LbfgsResult r = lbfgsMinimize(f, Vector::Constant(3, 7.0));
  CHECK((r.x - a).norm() < 1e-8);
  CHECK(r.iters <= 3);
}

TEST_CASE("lbfgs solves Rosenbrock") {
  Vector x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.gradTol = 1e-10;
  const LbfgsResult r = lbfgsMinimize(rosenbrock, x0, cfg);
  CHECK(std::abs(r.x(0) - 1.0) < 1e-5);
  CHECK(std::abs(r.x(1) - 1.0) < 1e-5);
}

TEST_CASE("lbfgs solves ill-conditioned quadratics to the linear solve") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = randomSpd(50, 1e3, gen);
    Vector b(50);
    for (int i = 0; i < 50; ++i) b(i) = z(gen);
    const ObjectiveFn f = [&](const Vector& x, Vector& g) {
      g = A * x - b;
      return 0.5 * x.dot(A * x) - b.dot(x);
    };
    LbfgsConfig cfg;
    cfg.maxIters = 200;
    const LbfgsResult r = lbfgsMinimize(f, Vector::Zero(50), cfg);
    CHECK(r.gradNorm < 1e-6);
    CHECK(r.iters < 200);
    const Vector xs = A.ldlt().solve(b);
    const double fs = 0.5 * xs.dot(A * xs) - b.dot(xs);
    CHECK(std::abs(r.f - fs) < 1e-8);
  }
}

TEST_CASE("lbfgs never increases the objective and is deterministic") {
  Vector x0(2);
  x0 << -1.5, 2.0;
  const LbfgsResult a = lbfgsMinimize(rosenbrock, x0), b = lbfgsMinimize(rosenbrock, x0);
  for (std::size_t i = 1; i < a.history.size(); ++i)
    CHECK(a.history[i] <= a.history[i - 1] + 1e-12 * std::max(1.0, std::abs(a.history[i - 1])));
  CHECK(a.history == b.history);
  CHECK(a.x == b.x);
}

TEST_CASE("lbfgs rejects a non-finite start and bad settings") {
  const ObjectiveFn f = [](const Vector& x, Vector& g) {
    g = x;
    return std::log(x(0));
  };
  CHECK_THROWS_AS(lbfgsMinimize(f, Vector::Constant(1, -1.0)), std::invalid_argument);
  LbfgsConfig bad;
  bad.c1 = 0.95;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.memory = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("a wrong gradient ends in a line-search failure without moving uphill") {
  const ObjectiveFn f = [](const Vector& x, Vector& g) {
    g = -2.0 * x;  // points uphill
    return x.squaredNorm();
  };
  const LbfgsResult r = lbfgsMinimize(f, Vector::Constant(2, 1.0));
  CHECK((r.status == LbfgsStatus::LineSearchFailed));
  CHECK(r.f <= 2.0);
}

TEST_CASE("gradient check on a quadratic and a corrupted gradient") {
  Matrix A(2, 2);
  A << 3.0, 1.0, 1.0, 2.0;
  const ObjectiveFn good = [&](const Vector& x, Vector& g) {
    g = A * x;
    return 0.5 * x.dot(A * x);
  };
  const ObjectiveFn bad = [&](const Vector& x, Vector& g) {
    g = A * x;
    g(1) *= 2.0;
    return 0.5 * x.dot(A * x);
  };
  Vector x(2);
  x << 0.7, -1.3;
  CHECK(gradCheck(good, x, 1e-5) < 1e-9);
  CHECK(gradCheck(bad, x, 1e-5) > 0.4);
}

TEST_CASE("penalty loop follows the closed-form path for x^2 with x = 1") {
  // minimum of x^2 + 0.5 * lambda * (x - 1)^2 is lambda / (2 + lambda)
  const auto build = [](const Vector& lambda) -> ObjectiveFn {
    return [l = lambda(0)](const Vector& x, Vector& g) {
      g.resize(1);
      g(0) = 2.0 * x(0) + l * (x(0) - 1.0);
      return x(0) * x(0) + 0.5 * l * (x(0) - 1.0) * (x(0) - 1.0);
    };
  };
  const auto residual = [](const Vector& x) { return Vector::Constant(1, x(0) - 1.0); };
  PenaltySchedule sched;
  sched.init = 1.0;
  sched.growth = 10.0;
  sched.maxRounds = 8;
  sched.feasTol = 1e-4;
  LbfgsConfig inner;
  inner.gradTol = 1e-12;
  const PenaltyResult r = penaltyLoop(build, residual, Vector::Zero(1), 1, sched, inner);
  double lambda = 1.0;
  for (double res : r.residualHistory) {
    CHECK(std::abs(res - 2.0 / (2.0 + lambda)) < 1e-8);
    lambda *= 10.0;
  }
  CHECK(std::abs(r.x(0) - 1.0) < 1e-4);
  CHECK(r.feasible);
}

TEST_CASE("penalty loop with a feasible optimum never grows the penalty") {
  const auto build = [](const Vector& lambda) -> ObjectiveFn {
    return [l = lambda(0)](const Vector& x, Vector& g) {
      g.resize(1);
      g(0) = 2.0 * (x(0) - 1.0) + l * (x(0) - 1.0);
      return (x(0) - 1.0) * (x(0) - 1.0) + 0.5 * l * (x(0) - 1.0) * (x(0) - 1.0);
    };
  };
  const auto residual = [](const Vector& x) { return Vector::Constant(1, x(0) - 1.0); };
  const PenaltyResult r = penaltyLoop(build, residual, Vector::Constant(1, 1.0), 1);
  CHECK(r.rounds == 1);
  CHECK(r.penalties(0) == 1.0);
  CHECK(r.feasible);
}

// Each constraint acts on its own block of variables and the objective does not
// couple blocks, the shape of the row-sum constraints. With coupled constraints
// only the Euclidean residual norm is guaranteed to shrink, not the max-norm.
TEST_CASE("penalty residuals shrink monotonically on random block-separable problems") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> z;
  const int blocks = 3, width = 4, n = blocks * width;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix A = Matrix::Zero(n, n);
    Matrix C = Matrix::Zero(blocks, n);
    Vector b(n), d(blocks);
    for (int k = 0; k < blocks; ++k) {
      A.block(k * width, k * width, width, width) = randomSpd(width, 50.0, gen);
      for (int j = 0; j < width; ++j) C(k, k * width + j) = z(gen);
      d(k) = z(gen);
    }
    for (int i = 0; i < n; ++i) b(i) = z(gen);
    const auto build = [&](const Vector& lambda) -> ObjectiveFn {
      return [&, lambda](const Vector& x, Vector& g) {
        const Vector r = C * x - d;
        g = A * x - b + C.transpose() * lambda.cwiseProduct(r);
        return 0.5 * x.dot(A * x) - b.dot(x) + 0.5 * r.dot(lambda.cwiseProduct(r));
      };
    };
    const auto residual = [&](const Vector& x) -> Vector { return C * x - d; };
    LbfgsConfig inner;
    inner.gradTol = 1e-10;
    const PenaltyResult r = penaltyLoop(build, residual, Vector::Zero(n), blocks, {}, inner);
    for (std::size_t i = 1; i < r.residualHistory.size(); ++i)
      REQUIRE(r.residualHistory[i] <= r.residualHistory[i - 1] + 1e-9);
  }
}
