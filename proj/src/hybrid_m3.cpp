#include "m3mix/hybrid_m3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "m3mix/infinite_m3.hpp"

namespace m3mix {
namespace {

Vector rowOf(const Matrix& data, std::size_t i) { return data.row(static_cast<Eigen::Index>(i)).transpose(); }

// Log-likelihood of the points in covariance component d under `cov`.
double componentLogLik(const HybridState& s, std::size_t d, const Matrix& cov) {
  const PreparedCovariance pc(cov);
  double total = 0.0;
  for (std::size_t i = 0; i < s.assignments.size(); ++i)
    if (s.assignments[i].z2 == d) total += pc.logDensity(rowOf(*s.data, i), s.means[s.assignments[i].z1]);
  return total;
}

std::size_t argmaxCovariance(const Vector& x, const Vector& mean, std::span<const PreparedCovariance> covs) {
  std::size_t best = 0;
  double bestValue = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < covs.size(); ++d) {
    const double v = covs[d].logDensity(x, mean);
    if (v > bestValue) {
      bestValue = v;
      best = d;
    }
  }
  return best;
}

}  // namespace

bool HybridState::invariantsHold() const {
  if (!data || static_cast<std::size_t>(data->rows()) != assignments.size()) return false;
  if (!counts.consistent() || !counts.fixedColumns() || counts.cols() != covs.size()) return false;
  if (!(counts == JointCounts::fromAssignments(assignments, covs.size()))) return false;
  if (means.size() != counts.rows()) return false;
  for (auto r : counts.rowMarginals())
    if (r < 1) return false;
  return true;
}

std::vector<Matrix> initialFiniteCovariances(const Matrix& data, const NIWPrior& prior, std::size_t k2) {
  const auto p = data.cols();
  Matrix global = Matrix::Identity(p, p);
  if (data.rows() > 1) {
    const Vector mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows());
    cov = 0.5 * (cov + cov.transpose());
    if (isPositiveDefinite(cov)) global = cov;
    else if (isPositiveDefinite(prior.lambda0)) global = prior.lambda0;
  }
  std::vector<Matrix> covs;
  double factor = 0.5;
  for (std::size_t d = 0; d < k2; ++d, factor *= 2.0) covs.push_back(factor * global);
  return covs;
}

HybridState initialHybridState(std::shared_ptr<const Matrix> data, const NIWPrior& prior, const Concentration& alpha,
                               std::size_t k2, std::size_t auxCount) {
  if (k2 < 1) throw std::invalid_argument("hybrid M3: K2 must be at least 1");
  if (!data || data->rows() == 0) throw std::invalid_argument("hybrid M3: empty data");
  if (auxCount == 0) throw std::invalid_argument("auxCount must be at least 1");
  prior.validate();
  if (static_cast<std::size_t>(data->cols()) != prior.dim())
    throw std::invalid_argument("hybrid M3: prior dimension does not match data");

  HybridState s;
  s.data = data;
  s.prior = prior;
  s.alpha = alpha;
  s.auxCount = auxCount;
  s.covs = initialFiniteCovariances(*data, prior, k2);
  s.means.assign(1, prior.mu0);
  std::vector<PreparedCovariance> prepared(s.covs.begin(), s.covs.end());
  s.assignments.resize(static_cast<std::size_t>(data->rows()));
  for (std::size_t i = 0; i < s.assignments.size(); ++i)
    s.assignments[i] = {0, argmaxCovariance(rowOf(*data, i), s.means[0], prepared)};
  s.counts = JointCounts::fromAssignments(s.assignments, k2);
  return s;
}

double completeDataLogLik(const HybridState& s) {
  std::vector<PreparedCovariance> prepared(s.covs.begin(), s.covs.end());
  double total = 0.0;
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const auto& a = s.assignments[i];
    total += prepared[a.z2].logDensity(rowOf(*s.data, i), s.means[a.z1]);
  }
  return total;
}

HybridSweepDiagnostics hybridSweep(HybridState& s, Rng& rng) {
  const Matrix& x = *s.data;
  const auto p = x.cols();
  const std::size_t m = s.auxCount;
  const std::size_t k2 = s.covs.size();
  std::vector<PreparedCovariance> prepared(s.covs.begin(), s.covs.end());
  const Matrix zeroP = Matrix::Zero(p, p);
  const Vector zeroV = Vector::Zero(p);

  // (a) z1 from the CRP over row marginals.
  std::vector<Vector> aux(m);
  std::vector<double> w;
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const Vector xi = rowOf(x, i);
    const Assignment2D old = s.assignments[i];
    const Compaction comp = s.counts.decrement(old.z1, old.z2);
    std::size_t fresh = 0;
    if (comp.removedRow) {
      aux[0] = std::move(s.means[old.z1]);
      s.means.erase(s.means.begin() + static_cast<std::ptrdiff_t>(old.z1));
      for (auto& a : s.assignments) a.z1 = comp.remapRow(a.z1);
      fresh = 1;
    }
    for (std::size_t k = fresh; k < m; ++k) aux[k] = sampleMeanFromEvidence(s.prior, zeroP, zeroV, rng);

    const Vector prior = crpWeights(s.counts.rowMarginals(), s.alpha, m);
    const std::size_t k1 = s.means.size();
    const PreparedCovariance& pc = prepared[old.z2];
    w.assign(static_cast<std::size_t>(prior.size()), 0.0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < w.size(); ++c) {
      if (prior[static_cast<Eigen::Index>(c)] <= 0.0) {
        w[c] = -std::numeric_limits<double>::infinity();
        continue;
      }
      w[c] = std::log(prior[static_cast<Eigen::Index>(c)]) + pc.logDensity(xi, c < k1 ? s.means[c] : aux[c - k1]);
      best = std::max(best, w[c]);
    }
    for (auto& v : w) v = std::isfinite(v) ? std::exp(v - best) : 0.0;
    std::size_t c = rng.categorical(w);
    if (c >= k1) {
      s.means.push_back(aux[c - k1]);
      c = k1;
    }
    s.counts.increment(c, old.z2);
    s.assignments[i] = {c, old.z2};
  }

  HybridSweepDiagnostics diag;
  diag.beforeAssign = completeDataLogLik(s);
  // (b) hard maximum-likelihood z2.
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    auto& a = s.assignments[i];
    const std::size_t d = argmaxCovariance(rowOf(x, i), s.means[a.z1], prepared);
    if (d != a.z2) {
      s.counts.increment(a.z1, d);
      s.counts.decrement(a.z1, a.z2);
      a.z2 = d;
    }
  }
  diag.afterAssign = completeDataLogLik(s);

  // (c) means given their points' covariances.
  std::vector<Matrix> precisions;
  for (const auto& cov : s.covs) precisions.push_back(Eigen::LLT<Matrix>(cov).solve(Matrix::Identity(p, p)));
  for (std::size_t c = 0; c < s.means.size(); ++c) {
    Matrix a = Matrix::Zero(p, p);
    Vector b = Vector::Zero(p);
    for (std::size_t i = 0; i < s.assignments.size(); ++i) {
      if (s.assignments[i].z1 != c) continue;
      const Matrix& prec = precisions[s.assignments[i].z2];
      a += prec;
      b += prec * rowOf(x, i);
    }
    s.means[c] = sampleMeanFromEvidence(s.prior, a, b, rng);
  }

  diag.beforeCovs = completeDataLogLik(s);
  // (d) finite-side covariance re-estimation.
  const auto dim = static_cast<std::int64_t>(p);
  for (std::size_t d = 0; d < k2; ++d) {
    const auto n = s.counts.colMarginal(d);
    if (n == 0) continue;
    Matrix scatter = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < s.assignments.size(); ++i) {
      if (s.assignments[i].z2 != d) continue;
      const Vector r = rowOf(x, i) - s.means[s.assignments[i].z1];
      scatter.noalias() += r * r.transpose();
    }
    Matrix candidate = n >= dim + 1 ? Matrix(scatter / static_cast<double>(n)) : Matrix();
    if (candidate.size() == 0 || !isPositiveDefinite(candidate))
      candidate = (s.prior.lambda0 + scatter) / (s.prior.nu0 + static_cast<double>(n) + static_cast<double>(dim) + 1.0);
    candidate = 0.5 * (candidate + candidate.transpose());
    if (!isPositiveDefinite(candidate)) continue;
    if (componentLogLik(s, d, candidate) >= componentLogLik(s, d, s.covs[d])) {
      s.covs[d] = std::move(candidate);
      prepared[d] = PreparedCovariance(s.covs[d]);
    }
  }
  diag.afterCovs = completeDataLogLik(s);
  return diag;
}

HybridResult hybridFit(std::shared_ptr<const Matrix> data, std::size_t k2, const HybridConfig& config) {
  if (k2 < 1) throw std::invalid_argument("hybridFit: K2 must be at least 1");
  if (!data || data->rows() == 0) throw std::invalid_argument("hybridFit: empty data");
  if (config.sweeps <= config.burnIn) throw std::invalid_argument("hybridFit: sweeps must exceed burnIn");
  if (config.thin == 0) throw std::invalid_argument("hybridFit: thin must be at least 1");
  const NIWPrior prior = config.prior ? *config.prior : NIWPrior::fromData(*data);
  Rng rng(config.seed, config.stream);
  HybridState state = initialHybridState(data, prior, Concentration(config.alpha), k2, config.auxCount);
  HybridResult out;
  for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
    const HybridSweepDiagnostics diag = hybridSweep(state, rng);
    const double tolA = 1e-9 * std::max(1.0, std::abs(diag.beforeAssign));
    const double tolC = 1e-9 * std::max(1.0, std::abs(diag.beforeCovs));
    if (diag.afterAssign < diag.beforeAssign - tolA || diag.afterCovs < diag.beforeCovs - tolC)
      out.mlStepsMonotone = false;
    out.diagnostics.push_back(diag);
    out.k1Trace.push_back(state.means.size());
    out.logLikTrace.push_back(diag.afterCovs);
    if (sweep >= config.burnIn && (sweep - config.burnIn) % config.thin == 0) out.samples.push_back(state);
  }
  out.finiteComponents = state.covs;
  return out;
}

double predictiveDensity(std::span<const HybridState> samples, const Vector& x) {
  if (samples.empty()) throw std::invalid_argument("predictiveDensity: no samples");
  double acc = 0.0;
  for (const auto& s : samples) acc += cellMixtureDensity(s.counts, s.means, s.covs, x);
  return acc / static_cast<double>(samples.size());
}

}  // namespace m3mix
