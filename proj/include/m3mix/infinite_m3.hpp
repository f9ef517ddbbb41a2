#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "m3mix/core_types.hpp"
#include "m3mix/gaussian.hpp"
#include "m3mix/rng.hpp"

namespace m3mix {

enum class InitMode {
  SingleCell,  // every point in cell (0,0)
  Diagonal,    // z1 = z2 = k, k uniform over initCells
  Random,      // z1, z2 independent uniform over initCells
};

// Gibbs state of the two-dimensional infinite model with Gaussian observations:
// dimension 1 holds means, dimension 2 holds covariances.
struct InfiniteM3State {
  std::shared_ptr<const Matrix> data;  // N x dim, one point per row
  std::vector<Assignment2D> assignments;
  JointCounts counts;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  NIWPrior prior;
  Concentration alpha{1.0};
  ShareWeights weights = ShareWeights::coupled();
  std::size_t auxCount = 3;

  std::size_t size() const noexcept { return assignments.size(); }
  // counts match assignments, parameter lists match the table, no empty components.
  bool invariantsHold() const;
};

// Prior weight of every (c, d) pair for the point being resampled, given counts that
// exclude it. Rows/columns past the existing K1/K2 are the auxCount auxiliary slots;
// the mass of each new-component case is spread evenly over them. Sums to 1.
// With an empty table all mass goes to the both-new block.
Matrix jointConditionalWeights(const JointCounts& counts, const Concentration& alpha,
                               const ShareWeights& weights, std::size_t auxCount);

// Standard CRP predictive over existing components plus auxCount new slots.
Vector crpWeights(std::span<const std::int64_t> marginals, const Concentration& alpha,
                  std::size_t auxCount);

struct InitOptions {
  InitMode mode = InitMode::SingleCell;
  std::size_t cells = 1;
};

InfiniteM3State initialState(std::shared_ptr<const Matrix> data, const NIWPrior& prior,
                             const Concentration& alpha, const ShareWeights& weights,
                             std::size_t auxCount, const InitOptions& init, Rng& rng);

// One sweep: resample every (z1_i, z2_i) in order, then every retained mean and covariance.
void gibbsSweep(InfiniteM3State& state, Rng& rng);

// sum_i log N(x_i; mu_{z1_i}, Sigma_{z2_i})
double completeDataLogLik(const InfiniteM3State& state);

// sum_{c,d} n_cd/N N(x; mu_c, Sigma_d) for one table.
double cellMixtureDensity(const JointCounts& counts, std::span<const Vector> means, std::span<const Matrix> covs,
                          const Vector& x);

// Posterior-averaged mixture density sum_{c,d} n_cd/N N(x; mu_c, Sigma_d).
double predictiveDensity(std::span<const InfiniteM3State> samples, const Vector& x);

struct ChainConfig {
  double alpha = 1.0;
  ShareWeights weights{0.5, 0.25, 0.25};
  std::optional<NIWPrior> prior;  // defaults to NIWPrior::fromData
  std::size_t sweeps = 200;
  std::size_t burnIn = 100;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::size_t auxCount = 3;
  InitOptions init;
};

struct ChainTrace {
  std::vector<std::size_t> k1;
  std::vector<std::size_t> k2;
  std::vector<double> logLik;
};

struct ChainResult {
  std::vector<InfiniteM3State> samples;
  ChainTrace trace;
};

ChainResult runChain(std::shared_ptr<const Matrix> data, const ChainConfig& config);

// Configuration of the single-dimension baseline: omega = 1 and diagonal initialization.
ChainConfig dpmmConfig(ChainConfig config);

// Joint cell label c * K2 + d of every point; distinct cells get distinct labels.
std::vector<int> jointLabels(std::span<const Assignment2D> assignments);

}  // namespace m3mix
