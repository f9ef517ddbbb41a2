#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "m3mix/core_types.hpp"
#include "m3mix/gaussian.hpp"
#include "m3mix/rng.hpp"

namespace m3mix {

// Dimension 1 (means) is a Dirichlet-process mixture; dimension 2 (covariances)
// is a finite mixture of K2 components fitted by maximum likelihood.
struct HybridState {
  std::shared_ptr<const Matrix> data;
  std::vector<Assignment2D> assignments;
  JointCounts counts;  // fixed K2 columns
  std::vector<Vector> means;
  std::vector<Matrix> covs;  // length K2 for the whole run
  NIWPrior prior;
  Concentration alpha{1.0};
  std::size_t auxCount = 3;

  bool invariantsHold() const;
};

// Complete-data log-likelihood at four points of a sweep. Steps (b) and (d) are
// the maximum-likelihood steps and must not lower it.
struct HybridSweepDiagnostics {
  double beforeAssign = 0.0;  // before the argmax z2 step
  double afterAssign = 0.0;
  double beforeCovs = 0.0;  // before the covariance re-estimation
  double afterCovs = 0.0;
};

// Data covariance (identity if singular) scaled by 0.5 * 2^d for component d.
std::vector<Matrix> initialFiniteCovariances(const Matrix& data, const NIWPrior& prior, std::size_t k2);

HybridState initialHybridState(std::shared_ptr<const Matrix> data, const NIWPrior& prior, const Concentration& alpha,
                               std::size_t k2, std::size_t auxCount);

// (a) resample every z1 from the CRP over row marginals times the likelihood,
// (b) z2 <- argmax_d density (ties to the lowest index), (c) resample means,
// (d) covariances to their MLE, or to the MAP form when a component has fewer
// than dim + 1 members (kept only if it does not lower that component's likelihood).
HybridSweepDiagnostics hybridSweep(HybridState& state, Rng& rng);

double completeDataLogLik(const HybridState& state);

// Posterior-averaged mixture density over the retained samples.
double predictiveDensity(std::span<const HybridState> samples, const Vector& x);

struct HybridConfig {
  double alpha = 1.0;
  std::optional<NIWPrior> prior;
  std::size_t sweeps = 200;
  std::size_t burnIn = 100;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::size_t auxCount = 3;
};

struct HybridResult {
  std::vector<HybridState> samples;
  std::vector<std::size_t> k1Trace;
  std::vector<double> logLikTrace;
  std::vector<HybridSweepDiagnostics> diagnostics;
  std::vector<Matrix> finiteComponents;  // covariances after the last sweep
  bool mlStepsMonotone = true;           // (b) and (d) never lowered the likelihood
};

HybridResult hybridFit(std::shared_ptr<const Matrix> data, std::size_t k2, const HybridConfig& config);

}  // namespace m3mix
