#include "m3mix/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "m3mix/errors.hpp"

namespace m3mix {

void NIWPrior::validate() const {
  const auto p = static_cast<Eigen::Index>(dim());
  if (p == 0) throw std::invalid_argument("NIW prior: zero dimension");
  if (lambda0.rows() != p || lambda0.cols() != p)
    throw std::invalid_argument("NIW prior: scale matrix shape does not match mu0");
  if (!(kappa0 > 0.0)) throw std::invalid_argument("NIW prior: kappa0 must be positive");
  if (!(nu0 > static_cast<double>(p) - 1.0))
    throw std::invalid_argument("NIW prior: nu0 must exceed dim - 1");
  if (!lambda0.isApprox(lambda0.transpose(), 1e-12) || !isPositiveDefinite(lambda0))
    throw std::invalid_argument("NIW prior: scale matrix must be symmetric positive definite");
}

Matrix NIWPrior::expectedCovariance() const {
  const double denom = nu0 - static_cast<double>(dim()) - 1.0;
  if (!(denom > 0.0))
    throw std::invalid_argument("NIW prior: expected covariance requires nu0 > dim + 1");
  return lambda0 / denom;
}

Matrix NIWPrior::meanPriorCovariance() const { return expectedCovariance() / kappa0; }

NIWPrior NIWPrior::fromData(const Matrix& data) {
  if (data.rows() == 0 || data.cols() == 0) throw std::invalid_argument("NIW prior: empty data");
  NIWPrior prior;
  const auto p = data.cols();
  prior.mu0 = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - prior.mu0.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
  cov = 0.5 * (cov + cov.transpose());
  prior.lambda0 = isPositiveDefinite(cov) ? cov : Matrix::Identity(p, p);
  prior.kappa0 = 0.01;
  prior.nu0 = static_cast<double>(p) + 2.0;
  return prior;
}

PreparedCovariance::PreparedCovariance(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  lower_ = llt.matrixL();
  logDet_ = 2.0 * lower_.diagonal().array().log().sum();
  if (!std::isfinite(logDet_)) throw NumericError("covariance is not positive definite");
}

double PreparedCovariance::logDensity(const Vector& x, const Vector& mean) const {
  const Vector z = lower_.triangularView<Eigen::Lower>().solve(x - mean);
  const double p = static_cast<double>(x.size());
  return -0.5 * (p * std::log(2.0 * std::numbers::pi) + logDet_ + z.squaredNorm());
}

double logDensity(const Vector& x, const Vector& mean, const Matrix& cov) {
  if (x.size() != mean.size() || cov.rows() != x.size() || cov.cols() != x.size())
    throw std::invalid_argument("logDensity: dimension mismatch");
  return PreparedCovariance(cov).logDensity(x, mean);
}

bool isPositiveDefinite(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success && (Matrix(llt.matrixL()).diagonal().array() > 0.0).all();
}

Vector drawStandardNormal(std::size_t dim, Rng& rng) {
  Vector z(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
  return z;
}

Vector sampleMeanFromEvidence(const NIWPrior& prior, const Matrix& dataPrecision,
                              const Vector& precisionWeightedSum, Rng& rng) {
  const Matrix priorPrecision = prior.meanPriorCovariance().inverse();
  Matrix precision = priorPrecision + dataPrecision;
  precision = 0.5 * (precision + precision.transpose());
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericError("mean posterior precision is not PD");
  const Vector rhs = priorPrecision * prior.mu0 + precisionWeightedSum;
  const Vector postMean = llt.solve(rhs);
  // precision = L L^T, so L^{-T} z has covariance precision^{-1}.
  const Vector z = drawStandardNormal(prior.dim(), rng);
  const Vector offset = llt.matrixU().solve(z);
  return postMean + offset;
}

Vector sampleMeanPosterior(const NIWPrior& prior,
                           std::span<const std::pair<Vector, Matrix>> points, Rng& rng) {
  const auto p = static_cast<Eigen::Index>(prior.dim());
  Matrix a = Matrix::Zero(p, p);
  Vector b = Vector::Zero(p);
  for (const auto& [x, cov] : points) {
    if (x.size() != p || cov.rows() != p) throw std::invalid_argument("sampleMeanPosterior: dimension mismatch");
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("point covariance is not PD");
    const Matrix inv = llt.solve(Matrix::Identity(p, p));
    a += inv;
    b += inv * x;
  }
  return sampleMeanFromEvidence(prior, a, b, rng);
}

Matrix sampleInverseWishart(double dof, const Matrix& scale, Rng& rng) {
  const auto p = scale.rows();
  if (!(dof > static_cast<double>(p) - 1.0)) throw std::invalid_argument("inverse-Wishart: dof too small");
  Eigen::LLT<Matrix> sllt(scale);
  if (sllt.info() != Eigen::Success) throw NumericError("inverse-Wishart scale is not PD");
  // Sigma^{-1} ~ Wishart(dof, scale^{-1}); scale^{-1} = L L^T.
  const Matrix scaleInv = sllt.solve(Matrix::Identity(p, p));
  Eigen::LLT<Matrix> illt(0.5 * (scaleInv + scaleInv.transpose()));
  const Matrix l = illt.matrixL();
  Matrix bartlett = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    bartlett(i, i) = std::sqrt(rng.chiSquared(dof - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const Matrix factor = l * bartlett;  // lower triangular, W = factor factor^T
  const Matrix factorInv =
      factor.triangularView<Eigen::Lower>().solve(Matrix::Identity(p, p));
  Matrix sigma = factorInv.transpose() * factorInv;
  sigma = 0.5 * (sigma + sigma.transpose());
  return sigma;
}

Matrix sampleCovFromScatter(const NIWPrior& prior, std::size_t n, const Matrix& scatter, Rng& rng) {
  return sampleInverseWishart(prior.nu0 + static_cast<double>(n), prior.lambda0 + scatter, rng);
}

Matrix sampleCovPosterior(const NIWPrior& prior,
                          std::span<const std::pair<Vector, Vector>> points, Rng& rng) {
  const auto p = static_cast<Eigen::Index>(prior.dim());
  Matrix scatter = Matrix::Zero(p, p);
  for (const auto& [x, mean] : points) {
    if (x.size() != p || mean.size() != p) throw std::invalid_argument("sampleCovPosterior: dimension mismatch");
    const Vector r = x - mean;
    scatter += r * r.transpose();
  }
  return sampleCovFromScatter(prior, points.size(), scatter, rng);
}

}  // namespace m3mix
