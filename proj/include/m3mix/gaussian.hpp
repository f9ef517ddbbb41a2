#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <span>
#include <utility>

#include "m3mix/rng.hpp"

namespace m3mix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Normal-Inverse-Wishart base distribution G0 over (mean, covariance).
struct NIWPrior {
  Vector mu0;
  double kappa0 = 0.01;
  double nu0 = 0.0;
  Matrix lambda0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu0.size()); }

  // Throws std::invalid_argument on shape mismatch, kappa0 <= 0, nu0 <= dim-1 or a
  // scale matrix that is not symmetric positive definite.
  void validate() const;

  // E[Sigma] = lambda0 / (nu0 - dim - 1); requires nu0 > dim + 1.
  Matrix expectedCovariance() const;

  // Prior covariance of a mean component: E[Sigma] / kappa0.
  Matrix meanPriorCovariance() const;

  // mu0 = data mean, kappa0 = 0.01, nu0 = dim + 2, lambda0 = data covariance
  // (identity when the data covariance is singular). Rows of `data` are points.
  static NIWPrior fromData(const Matrix& data);
};

struct GaussianComponent {
  Vector mean;
  Matrix covariance;
};

// Cholesky factor of a covariance with its log-determinant, for repeated density calls.
class PreparedCovariance {
 public:
  // Throws NumericError if `cov` is not positive definite.
  explicit PreparedCovariance(const Matrix& cov);

  double logDensity(const Vector& x, const Vector& mean) const;
  const Matrix& lower() const noexcept { return lower_; }
  double logDet() const noexcept { return logDet_; }

 private:
  Matrix lower_;
  double logDet_ = 0.0;
};

// Multivariate normal log-density. Throws NumericError for a non-PD covariance.
double logDensity(const Vector& x, const Vector& mean, const Matrix& cov);

bool isPositiveDefinite(const Matrix& m);

// Gaussian conditional of a mean component whose points carry heterogeneous
// covariances. `dataPrecision` is sum_i Sigma_i^{-1} and `precisionWeightedSum`
// is sum_i Sigma_i^{-1} x_i over the member points; both zero for an empty component.
Vector sampleMeanFromEvidence(const NIWPrior& prior, const Matrix& dataPrecision,
                              const Vector& precisionWeightedSum, Rng& rng);

// One entry per member point: (x_i, Sigma of the point's covariance component).
// An empty list draws from the mean prior N(mu0, E[Sigma]/kappa0).
Vector sampleMeanPosterior(const NIWPrior& prior,
                           std::span<const std::pair<Vector, Matrix>> points, Rng& rng);

// Draw from Inverse-Wishart(dof, scale) via the Bartlett decomposition of its inverse.
Matrix sampleInverseWishart(double dof, const Matrix& scale, Rng& rng);

// Inverse-Wishart(nu0 + n, lambda0 + scatter).
Matrix sampleCovFromScatter(const NIWPrior& prior, std::size_t n, const Matrix& scatter, Rng& rng);

// One entry per member point: (x_i, mean currently assigned to the point).
Matrix sampleCovPosterior(const NIWPrior& prior,
                          std::span<const std::pair<Vector, Vector>> points, Rng& rng);

Vector drawStandardNormal(std::size_t dim, Rng& rng);

}  // namespace m3mix
