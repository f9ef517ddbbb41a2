#include "m3mix/infinite_m3.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace m3mix {

Matrix jointConditionalWeights(const JointCounts& counts, const Concentration& alpha,
                               const ShareWeights& weights, std::size_t auxCount) {
  if (auxCount == 0) throw std::invalid_argument("auxCount must be at least 1");
  const auto k1 = static_cast<Eigen::Index>(counts.rows());
  const auto k2 = static_cast<Eigen::Index>(counts.cols());
  const auto m = static_cast<Eigen::Index>(auxCount);
  const double md = static_cast<double>(auxCount);
  Matrix w = Matrix::Zero(k1 + m, k2 + m);

  const double n = static_cast<double>(counts.total());
  const double a = alpha.value();
  if (counts.total() == 0) {
    w.bottomRightCorner(m, m).setConstant(1.0 / (md * md));
    return w;
  }
  const double denom = n * (n + a);
  const double om = weights.omega();
  for (Eigen::Index c = 0; c < k1; ++c) {
    const double rc = static_cast<double>(counts.rowMarginal(static_cast<std::size_t>(c)));
    for (Eigen::Index d = 0; d < k2; ++d) {
      const double sd = static_cast<double>(counts.colMarginal(static_cast<std::size_t>(d)));
      const double ncd = static_cast<double>(counts.at(static_cast<std::size_t>(c), static_cast<std::size_t>(d)));
      w(c, d) = ((1.0 - om) * rc * sd + om * ncd * n) / denom;
    }
    // existing mean component, new covariance component
    w.block(c, k2, 1, m).setConstant(weights.omega2() * a * rc / denom / md);
  }
  for (Eigen::Index d = 0; d < k2; ++d) {
    const double sd = static_cast<double>(counts.colMarginal(static_cast<std::size_t>(d)));
    // new mean component, existing covariance component
    w.block(k1, d, m, 1).setConstant(weights.omega1() * a * sd / denom / md);
  }
  w.bottomRightCorner(m, m).setConstant(om * a / (n + a) / (md * md));
  return w;
}

Vector crpWeights(std::span<const std::int64_t> marginals, const Concentration& alpha,
                  std::size_t auxCount) {
  if (auxCount == 0) throw std::invalid_argument("auxCount must be at least 1");
  const auto k = static_cast<Eigen::Index>(marginals.size());
  Vector w(k + static_cast<Eigen::Index>(auxCount));
  double n = 0.0;
  for (auto v : marginals) n += static_cast<double>(v);
  const double denom = n + alpha.value();
  for (Eigen::Index c = 0; c < k; ++c) w[c] = static_cast<double>(marginals[static_cast<std::size_t>(c)]) / denom;
  w.tail(static_cast<Eigen::Index>(auxCount)).setConstant(alpha.value() / denom / static_cast<double>(auxCount));
  return w;
}

bool InfiniteM3State::invariantsHold() const {
  if (!data || static_cast<std::size_t>(data->rows()) != assignments.size()) return false;
  if (!counts.consistent()) return false;
  if (!(counts == JointCounts::fromAssignments(assignments))) return false;
  if (means.size() != counts.rows() || covs.size() != counts.cols()) return false;
  for (auto r : counts.rowMarginals()) if (r < 1) return false;
  for (auto s : counts.colMarginals()) if (s < 1) return false;
  return true;
}

namespace {

void resampleParameters(InfiniteM3State& s, Rng& rng) {
  const Matrix& x = *s.data;
  const auto p = x.cols();
  const std::size_t k1 = s.means.size();
  const std::size_t k2 = s.covs.size();

  std::vector<Matrix> precisions;
  precisions.reserve(k2);
  for (const auto& cov : s.covs) {
    Eigen::LLT<Matrix> llt(cov);
    precisions.push_back(llt.solve(Matrix::Identity(p, p)));
  }
  // Cell sums of x feed the mean conditionals.
  std::vector<Vector> cellSums(k1 * k2, Vector::Zero(p));
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const auto& a = s.assignments[i];
    cellSums[a.z1 * k2 + a.z2] += x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  for (std::size_t c = 0; c < k1; ++c) {
    Matrix dataPrecision = Matrix::Zero(p, p);
    Vector weighted = Vector::Zero(p);
    for (std::size_t d = 0; d < k2; ++d) {
      const auto n = s.counts.at(c, d);
      if (n == 0) continue;
      dataPrecision += static_cast<double>(n) * precisions[d];
      weighted += precisions[d] * cellSums[c * k2 + d];
    }
    s.means[c] = sampleMeanFromEvidence(s.prior, dataPrecision, weighted, rng);
  }

  std::vector<Matrix> scatter(k2, Matrix::Zero(p, p));
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const auto& a = s.assignments[i];
    const Vector r = x.row(static_cast<Eigen::Index>(i)).transpose() - s.means[a.z1];
    scatter[a.z2].noalias() += r * r.transpose();
  }
  for (std::size_t d = 0; d < k2; ++d) {
    s.covs[d] = sampleCovFromScatter(s.prior, static_cast<std::size_t>(s.counts.colMarginal(d)), scatter[d], rng);
  }
}

Vector drawPriorMean(const NIWPrior& prior, Rng& rng) {
  return sampleMeanFromEvidence(prior, Matrix::Zero(static_cast<Eigen::Index>(prior.dim()), static_cast<Eigen::Index>(prior.dim())),
                                Vector::Zero(static_cast<Eigen::Index>(prior.dim())), rng);
}

}  // namespace

InfiniteM3State initialState(std::shared_ptr<const Matrix> data, const NIWPrior& prior,
                             const Concentration& alpha, const ShareWeights& weights,
                             std::size_t auxCount, const InitOptions& init, Rng& rng) {
  if (!data || data->rows() == 0) throw std::invalid_argument("infinite M3: empty data");
  prior.validate();
  if (static_cast<std::size_t>(data->cols()) != prior.dim())
    throw std::invalid_argument("infinite M3: prior dimension does not match data");
  if (auxCount == 0) throw std::invalid_argument("auxCount must be at least 1");

  InfiniteM3State s;
  s.data = data;
  s.prior = prior;
  s.alpha = alpha;
  s.weights = weights;
  s.auxCount = auxCount;

  const auto n = static_cast<std::size_t>(data->rows());
  const std::size_t cells = std::max<std::size_t>(1, std::min(init.cells, n));
  s.assignments.resize(n);
  if (init.mode != InitMode::SingleCell && cells > 1) {
    for (auto& a : s.assignments) {
      a.z1 = static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells));
      a.z2 = init.mode == InitMode::Diagonal ? a.z1
                                             : static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells));
    }
    // Compact labels so no component is empty.
    auto compact = [&](auto member) {
      std::map<std::size_t, std::size_t> relabel;
      for (auto& a : s.assignments) relabel.emplace(a.*member, 0);
      std::size_t next = 0;
      for (auto& [k, v] : relabel) v = next++;
      for (auto& a : s.assignments) a.*member = relabel[a.*member];
    };
    if (init.mode == InitMode::Diagonal) {
      std::map<std::size_t, std::size_t> relabel;
      for (auto& a : s.assignments) relabel.emplace(a.z1, 0);
      std::size_t next = 0;
      for (auto& [k, v] : relabel) v = next++;
      for (auto& a : s.assignments) a.z1 = a.z2 = relabel[a.z1];
    } else {
      compact(&Assignment2D::z1);
      compact(&Assignment2D::z2);
    }
  }
  s.counts = JointCounts::fromAssignments(s.assignments);

  const Matrix expected = prior.expectedCovariance();
  s.covs.assign(s.counts.cols(), expected);
  s.means.assign(s.counts.rows(), prior.mu0);
  resampleParameters(s, rng);
  return s;
}

void gibbsSweep(InfiniteM3State& s, Rng& rng) {
  const Matrix& x = *s.data;
  const std::size_t m = s.auxCount;
  std::vector<PreparedCovariance> prepared;
  prepared.reserve(s.covs.size());
  for (const auto& cov : s.covs) prepared.emplace_back(cov);

  std::vector<Vector> auxMeans(m);
  std::vector<Matrix> auxCovs(m);
  std::vector<PreparedCovariance> auxPrepared;
  Vector weightsFlat;

  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const Vector xi = x.row(static_cast<Eigen::Index>(i)).transpose();
    const Assignment2D old = s.assignments[i];
    const Compaction comp = s.counts.decrement(old.z1, old.z2);

    // A component emptied by removing x_i becomes the first auxiliary slot.
    std::size_t freshMeans = 0, freshCovs = 0;
    if (comp.removedRow) {
      auxMeans[0] = std::move(s.means[old.z1]);
      s.means.erase(s.means.begin() + static_cast<std::ptrdiff_t>(old.z1));
      freshMeans = 1;
    }
    if (comp.removedCol) {
      auxCovs[0] = std::move(s.covs[old.z2]);
      s.covs.erase(s.covs.begin() + static_cast<std::ptrdiff_t>(old.z2));
      prepared.erase(prepared.begin() + static_cast<std::ptrdiff_t>(old.z2));
      freshCovs = 1;
    }
    if (comp.removedRow || comp.removedCol) {
      for (auto& a : s.assignments) {
        a.z1 = comp.remapRow(a.z1);
        a.z2 = comp.remapCol(a.z2);
      }
    }
    for (std::size_t k = freshMeans; k < m; ++k) auxMeans[k] = drawPriorMean(s.prior, rng);
    for (std::size_t k = freshCovs; k < m; ++k)
      auxCovs[k] = sampleInverseWishart(s.prior.nu0, s.prior.lambda0, rng);
    auxPrepared.clear();
    for (std::size_t k = 0; k < m; ++k) auxPrepared.emplace_back(auxCovs[k]);

    const Matrix prior = jointConditionalWeights(s.counts, s.alpha, s.weights, m);
    const auto rows = prior.rows();
    const auto cols = prior.cols();
    const auto k1 = static_cast<Eigen::Index>(s.means.size());
    const auto k2 = static_cast<Eigen::Index>(s.covs.size());

    Matrix logw = Matrix::Constant(rows, cols, -std::numeric_limits<double>::infinity());
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < rows; ++c) {
      const Vector& mean = c < k1 ? s.means[static_cast<std::size_t>(c)] : auxMeans[static_cast<std::size_t>(c - k1)];
      for (Eigen::Index d = 0; d < cols; ++d) {
        const double pw = prior(c, d);
        if (pw <= 0.0) continue;
        const PreparedCovariance& pc =
            d < k2 ? prepared[static_cast<std::size_t>(d)] : auxPrepared[static_cast<std::size_t>(d - k2)];
        const double lw = std::log(pw) + pc.logDensity(xi, mean);
        logw(c, d) = lw;
        best = std::max(best, lw);
      }
    }
    weightsFlat.resize(rows * cols);
    for (Eigen::Index c = 0; c < rows; ++c)
      for (Eigen::Index d = 0; d < cols; ++d)
        weightsFlat[c * cols + d] = std::isfinite(logw(c, d)) ? std::exp(logw(c, d) - best) : 0.0;
    const std::size_t pick = rng.categorical(std::span<const double>(weightsFlat.data(), static_cast<std::size_t>(weightsFlat.size())));
    auto c = static_cast<Eigen::Index>(pick) / cols;
    auto d = static_cast<Eigen::Index>(pick) % cols;

    if (c >= k1) {
      s.means.push_back(auxMeans[static_cast<std::size_t>(c - k1)]);
      c = k1;
    }
    if (d >= k2) {
      s.covs.push_back(auxCovs[static_cast<std::size_t>(d - k2)]);
      prepared.push_back(auxPrepared[static_cast<std::size_t>(d - k2)]);
      d = k2;
    }
    s.counts.increment(static_cast<std::size_t>(c), static_cast<std::size_t>(d));
    s.assignments[i] = {static_cast<std::size_t>(c), static_cast<std::size_t>(d)};
  }
  resampleParameters(s, rng);
}

double completeDataLogLik(const InfiniteM3State& s) {
  std::vector<PreparedCovariance> prepared;
  prepared.reserve(s.covs.size());
  for (const auto& cov : s.covs) prepared.emplace_back(cov);
  double total = 0.0;
  for (std::size_t i = 0; i < s.assignments.size(); ++i) {
    const auto& a = s.assignments[i];
    total += prepared[a.z2].logDensity(s.data->row(static_cast<Eigen::Index>(i)).transpose(), s.means[a.z1]);
  }
  return total;
}

double cellMixtureDensity(const JointCounts& counts, std::span<const Vector> means, std::span<const Matrix> covs,
                          const Vector& x) {
  if (counts.total() == 0) throw std::invalid_argument("cellMixtureDensity: empty table");
  const double n = static_cast<double>(counts.total());
  double dens = 0.0;
  for (std::size_t d = 0; d < counts.cols(); ++d) {
    if (counts.colMarginal(d) == 0) continue;
    const PreparedCovariance prepared(covs[d]);
    for (std::size_t c = 0; c < counts.rows(); ++c) {
      const auto ncd = counts.at(c, d);
      if (ncd == 0) continue;
      if (means[c].size() != x.size()) throw std::invalid_argument("predictiveDensity: dimension mismatch");
      dens += static_cast<double>(ncd) / n * std::exp(prepared.logDensity(x, means[c]));
    }
  }
  return dens;
}

double predictiveDensity(std::span<const InfiniteM3State> samples, const Vector& x) {
  if (samples.empty()) throw std::invalid_argument("predictiveDensity: no samples");
  double acc = 0.0;
  for (const auto& s : samples) acc += cellMixtureDensity(s.counts, s.means, s.covs, x);
  return acc / static_cast<double>(samples.size());
}

ChainConfig dpmmConfig(ChainConfig config) {
  config.weights = ShareWeights::coupled();
  config.init.mode = config.init.cells > 1 ? InitMode::Diagonal : InitMode::SingleCell;
  return config;
}

ChainResult runChain(std::shared_ptr<const Matrix> data, const ChainConfig& config) {
  if (!data || data->rows() == 0) throw std::invalid_argument("runChain: empty data");
  if (config.sweeps <= config.burnIn) throw std::invalid_argument("runChain: sweeps must exceed burnIn");
  if (config.thin == 0) throw std::invalid_argument("runChain: thin must be at least 1");
  const NIWPrior prior = config.prior ? *config.prior : NIWPrior::fromData(*data);
  Rng rng(config.seed, config.stream);
  InfiniteM3State state = initialState(data, prior, Concentration(config.alpha), config.weights,
                                       config.auxCount, config.init, rng);
  ChainResult out;
  for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
    gibbsSweep(state, rng);
    out.trace.k1.push_back(state.means.size());
    out.trace.k2.push_back(state.covs.size());
    out.trace.logLik.push_back(completeDataLogLik(state));
    if (sweep >= config.burnIn && (sweep - config.burnIn) % config.thin == 0) out.samples.push_back(state);
  }
  return out;
}

std::vector<int> jointLabels(std::span<const Assignment2D> assignments) {
  std::size_t k2 = 0;
  for (const auto& a : assignments) k2 = std::max(k2, a.z2 + 1);
  std::vector<int> labels;
  labels.reserve(assignments.size());
  for (const auto& a : assignments) labels.push_back(static_cast<int>(a.z1 * k2 + a.z2));
  return labels;
}

}  // namespace m3mix
