#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "m3mix/gaussian.hpp"

namespace m3mix::optim {

// Returns f(x) and writes the gradient into `grad` (resized by the callee if needed).
using ObjectiveFn = std::function<double(const Vector& x, Vector& grad)>;

struct LbfgsConfig {
  std::size_t memory = 10;
  std::size_t maxIters = 1000;
  double gradTol = 1e-6;  // on the Euclidean norm of the gradient
  double fTol = 0.0;      // relative decrease below which to stop; 0 disables
  double c1 = 1e-4;
  double c2 = 0.9;
  double initialStep = 1.0;
  std::size_t maxLineSearchSteps = 40;

  void validate() const;
};

enum class LbfgsStatus { Converged, MaxIterations, FunctionTolerance, LineSearchFailed };

const char* toString(LbfgsStatus status);

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  double gradNorm = 0.0;
  std::size_t iters = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::vector<double> history;  // f at x0 and at every accepted iterate
};

// Limited-memory BFGS with a strong-Wolfe line search. Deterministic. An accepted
// step never raises f by more than 1e-12 * max(1, |f|), the rounding level at
// which the line search switches to the derivative form of the decrease test.
// Throws std::invalid_argument if f(x0) is not finite.
LbfgsResult lbfgsMinimize(const ObjectiveFn& f, const Vector& x0, const LbfgsConfig& cfg = {});

// Largest per-coordinate relative error between the analytic gradient and central
// differences with step h, relative to max(1, |analytic|).
double gradCheck(const ObjectiveFn& f, const Vector& x, double h = 1e-5);

struct PenaltySchedule {
  double init = 1.0;
  double growth = 10.0;
  std::size_t maxRounds = 8;
  double feasTol = 1e-4;
  double cap = 1e8;
  std::size_t lineSearchRestarts = 2;  // inner restarts with a halved initial step
};

struct PenaltyResult {
  Vector x;
  Vector penalties;
  std::size_t rounds = 0;
  bool feasible = false;
  std::vector<double> residualHistory;  // max-norm residual after every round
  LbfgsStatus lastStatus = LbfgsStatus::Converged;
  bool lineSearchFailed = false;  // an inner solve still failed after its restarts
};

// Quadratic-penalty driver: minimize the objective built for the current penalty
// weights, then grow only the weights of violated constraints. Stops once every
// residual is within feasTol or after maxRounds; in the latter case the most
// feasible iterate is returned with feasible = false.
PenaltyResult penaltyLoop(const std::function<ObjectiveFn(const Vector& penalties)>& buildObjective,
                          const std::function<Vector(const Vector& x)>& residuals,
                          const Vector& x0, std::size_t numConstraints,
                          const PenaltySchedule& schedule = {}, const LbfgsConfig& inner = {});

}  // namespace m3mix::optim
