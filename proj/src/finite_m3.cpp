#include "m3mix/finite_m3.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "m3mix/rng.hpp"

namespace m3mix {
namespace {

constexpr double kLogFloor = 1e-300;
constexpr double kThetaFloor = 1e-12;

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }
double lgam(double x) { return boost::math::lgamma(x); }

Vector expectedLogPi(const Vector& gamma) {
  const double total = digamma(gamma.sum());
  Vector out(gamma.size());
  for (Eigen::Index i = 0; i < gamma.size(); ++i) out[i] = digamma(gamma[i]) - total;
  return out;
}

// Dirichlet prior term minus the entropy-side Dirichlet term for one dimension.
double dirichletTerms(double alpha, const Vector& gamma, const Vector& elog) {
  const double k = static_cast<double>(gamma.size());
  double out = lgam(k * alpha) - k * lgam(alpha) + (alpha - 1.0) * elog.sum();
  out -= lgam(gamma.sum());
  for (Eigen::Index i = 0; i < gamma.size(); ++i) out += lgam(gamma[i]) - (gamma[i] - 1.0) * elog[i];
  return out;
}

double assignmentTerms(const Matrix& phi, const Vector& elog) {
  double out = 0.0;
  for (Eigen::Index n = 0; n < phi.rows(); ++n)
    for (Eigen::Index i = 0; i < phi.cols(); ++i) {
      const double p = phi(n, i);
      if (p > 0.0) out += p * (elog[i] - std::log(p));
    }
  return out;
}

// log wordProb(i, j, v) for every (i, j); flags entries that needed the floor.
Matrix logWordProbs(const FiniteM3Model& model, std::size_t v, bool& floored) {
  const double a = 0.5 * (1.0 + model.omega);
  const double b = 0.5 * (1.0 - model.omega);
  const auto k1 = static_cast<Eigen::Index>(model.k1());
  const auto k2 = static_cast<Eigen::Index>(model.k2());
  const auto col = static_cast<Eigen::Index>(v);
  Matrix out(k1, k2);
  floored = false;
  for (Eigen::Index i = 0; i < k1; ++i)
    for (Eigen::Index j = 0; j < k2; ++j) {
      const double p = a * model.theta1(i, col) + b * model.theta2(j, col);
      if (p < kLogFloor) floored = true;
      out(i, j) = std::log(std::max(p, kLogFloor));
    }
  return out;
}

template <typename Row>
void normalizeLogRow(Row&& row) {
  const double mx = row.maxCoeff();
  row = (row.array() - mx).exp();
  row /= row.sum();
}

void checkDocument(const FiniteM3Model& model, const Document& doc) {
  for (auto t : doc.tokens)
    if (t >= model.vocabSize()) throw std::out_of_range("document token outside the vocabulary");
}

}  // namespace

void FiniteM3Model::validate() const {
  if (theta1.rows() < 1 || theta2.rows() < 1) throw std::invalid_argument("model needs K1, K2 >= 1");
  if (theta1.cols() != theta2.cols() || theta1.cols() < 1)
    throw std::invalid_argument("theta1 and theta2 must share a non-empty vocabulary");
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) throw std::invalid_argument("alphas must be positive");
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("omega must lie in [0,1]");
  for (const Matrix* t : {&theta1, &theta2}) {
    if ((t->array() < 0.0).any() || !t->allFinite()) throw std::invalid_argument("theta entries must be non-negative");
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      if (std::abs(t->row(i).sum() - 1.0) > 1e-8) throw std::invalid_argument("theta rows must sum to 1");
  }
}

double wordProb(const FiniteM3Model& model, std::size_t z1, std::size_t z2, std::size_t v) {
  if (z1 >= model.k1() || z2 >= model.k2() || v >= model.vocabSize())
    throw std::out_of_range("wordProb index out of range");
  const auto c = static_cast<Eigen::Index>(v);
  return 0.5 * (1.0 + model.omega) * model.theta1(static_cast<Eigen::Index>(z1), c) +
         0.5 * (1.0 - model.omega) * model.theta2(static_cast<Eigen::Index>(z2), c);
}

VariationalState uniformState(const FiniteM3Model& model, const Document& doc) {
  const auto n = static_cast<Eigen::Index>(doc.tokens.size());
  const auto k1 = static_cast<Eigen::Index>(model.k1());
  const auto k2 = static_cast<Eigen::Index>(model.k2());
  VariationalState vs;
  vs.phi1 = Matrix::Constant(n, k1, 1.0 / static_cast<double>(k1));
  vs.phi2 = Matrix::Constant(n, k2, 1.0 / static_cast<double>(k2));
  vs.gamma1 = Vector::Constant(k1, model.alpha1 + static_cast<double>(n) / static_cast<double>(k1));
  vs.gamma2 = Vector::Constant(k2, model.alpha2 + static_cast<double>(n) / static_cast<double>(k2));
  return vs;
}

double elbo(const FiniteM3Model& model, const Document& doc, const VariationalState& vs, bool* clamped) {
  checkDocument(model, doc);
  const auto n = static_cast<Eigen::Index>(doc.tokens.size());
  if (vs.phi1.rows() != n || vs.phi2.rows() != n || vs.phi1.cols() != static_cast<Eigen::Index>(model.k1()) ||
      vs.phi2.cols() != static_cast<Eigen::Index>(model.k2()) || vs.gamma1.size() != vs.phi1.cols() ||
      vs.gamma2.size() != vs.phi2.cols())
    throw std::invalid_argument("variational state shape does not match model/document");

  const Vector elog1 = expectedLogPi(vs.gamma1);
  const Vector elog2 = expectedLogPi(vs.gamma2);
  double total = dirichletTerms(model.alpha1, vs.gamma1, elog1) + dirichletTerms(model.alpha2, vs.gamma2, elog2);
  total += assignmentTerms(vs.phi1, elog1) + assignmentTerms(vs.phi2, elog2);

  bool anyClamp = false;
  std::unordered_map<std::uint32_t, Matrix> cache;
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto v = doc.tokens[static_cast<std::size_t>(t)];
    auto it = cache.find(v);
    if (it == cache.end()) {
      bool floored = false;
      it = cache.emplace(v, logWordProbs(model, v, floored)).first;
      if (floored) {
        // Only counts when the floored cell carries phi mass.
        const double a = 0.5 * (1.0 + model.omega), b = 0.5 * (1.0 - model.omega);
        for (Eigen::Index i = 0; i < vs.phi1.cols(); ++i)
          for (Eigen::Index j = 0; j < vs.phi2.cols(); ++j)
            if (a * model.theta1(i, v) + b * model.theta2(j, v) < kLogFloor && vs.phi1(t, i) * vs.phi2(t, j) > 0.0)
              anyClamp = true;
      }
    }
    total += vs.phi1.row(t) * it->second * vs.phi2.row(t).transpose();
  }
  if (clamped) *clamped = anyClamp;
  return total;
}

EStepResult eStep(const FiniteM3Model& model, const Document& doc, std::size_t maxIters, double tol) {
  return eStep(model, doc, uniformState(model, doc), maxIters, tol);
}

EStepResult eStep(const FiniteM3Model& model, const Document& doc, VariationalState start,
                  std::size_t maxIters, double tol) {
  checkDocument(model, doc);
  EStepResult out;
  out.state = std::move(start);
  auto& vs = out.state;
  const auto n = static_cast<Eigen::Index>(doc.tokens.size());

  std::unordered_map<std::uint32_t, Matrix> logp;
  for (auto v : doc.tokens) {
    if (!logp.count(v)) {
      bool floored = false;
      logp.emplace(v, logWordProbs(model, v, floored));
    }
  }

  bool clamped = false;
  out.elbo = elbo(model, doc, vs, &clamped);
  out.history.push_back(out.elbo);
  for (std::size_t it = 0; it < maxIters; ++it) {
    const Vector elog1 = expectedLogPi(vs.gamma1);
    for (Eigen::Index t = 0; t < n; ++t) {
      const Matrix& lp = logp.at(doc.tokens[static_cast<std::size_t>(t)]);
      vs.phi1.row(t) = elog1.transpose() + (lp * vs.phi2.row(t).transpose()).transpose();
      normalizeLogRow(vs.phi1.row(t));
    }
    const Vector elog2 = expectedLogPi(vs.gamma2);
    for (Eigen::Index t = 0; t < n; ++t) {
      const Matrix& lp = logp.at(doc.tokens[static_cast<std::size_t>(t)]);
      vs.phi2.row(t) = elog2.transpose() + vs.phi1.row(t) * lp;
      normalizeLogRow(vs.phi2.row(t));
    }
    vs.gamma1 = (Vector::Constant(vs.phi1.cols(), model.alpha1) + vs.phi1.colwise().sum().transpose()).eval();
    vs.gamma2 = (Vector::Constant(vs.phi2.cols(), model.alpha2) + vs.phi2.colwise().sum().transpose()).eval();

    const double prev = out.elbo;
    out.elbo = elbo(model, doc, vs, &clamped);
    out.history.push_back(out.elbo);
    ++out.iters;
    if (std::abs(out.elbo - prev) <= tol * std::max(1.0, std::abs(out.elbo))) break;
  }
  out.clamped = clamped;
  return out;
}

EStepResult inferDocument(const FiniteM3Model& model, const Document& doc, std::size_t maxIters, double tol) {
  return eStep(model, doc, maxIters, tol);
}

Vector predictiveWordDistribution(const FiniteM3Model& model, const VariationalState& vs) {
  const Vector p1 = vs.gamma1 / vs.gamma1.sum();
  const Vector p2 = vs.gamma2 / vs.gamma2.sum();
  return 0.5 * (1.0 + model.omega) * (model.theta1.transpose() * p1) +
         0.5 * (1.0 - model.omega) * (model.theta2.transpose() * p2);
}

double alphaObjective(std::span<const Vector> gammas, double alpha) {
  double out = 0.0;
  for (const auto& g : gammas) {
    const double k = static_cast<double>(g.size());
    out += lgam(k * alpha) - k * lgam(alpha) + (alpha - 1.0) * expectedLogPi(g).sum();
  }
  return out;
}

AlphaUpdate updateAlpha(std::span<const Vector> gammas, std::size_t k, double currentAlpha) {
  if (!(currentAlpha > 0.0)) throw std::invalid_argument("updateAlpha: alpha must be positive");
  AlphaUpdate out{currentAlpha, false};
  if (k <= 1 || gammas.empty()) return out;
  for (const auto& g : gammas) {
    if (static_cast<std::size_t>(g.size()) != k) throw std::invalid_argument("updateAlpha: gamma length != K");
    if ((g.array() <= 0.0).any()) throw std::invalid_argument("updateAlpha: gammas must be positive");
  }
  double ss = 0.0;
  for (const auto& g : gammas) ss += expectedLogPi(g).sum();
  const double d = static_cast<double>(gammas.size());
  const double kd = static_cast<double>(k);

  double alpha = currentAlpha;
  double value = alphaObjective(gammas, alpha);
  for (int iter = 0; iter < 100; ++iter) {
    const double grad = d * kd * (digamma(kd * alpha) - digamma(alpha)) + ss;
    const double hess = d * (kd * kd * trigamma(kd * alpha) - kd * trigamma(alpha));
    double step = hess < 0.0 ? -grad / hess : grad;  // Newton, gradient ascent if not concave
    if (std::abs(step) <= 1e-12 * alpha) break;
    bool accepted = false;
    for (int back = 0; back < 50; ++back) {
      const double trial = alpha + step;
      if (trial > 0.0) {
        const double tv = alphaObjective(gammas, trial);
        if (std::isfinite(tv) && tv >= value) {
          accepted = true;
          alpha = trial;
          value = tv;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.warning = iter == 0;
      break;
    }
    if (std::abs(step) <= 1e-10 * alpha) break;
  }
  out.alpha = alpha;
  return out;
}

TopicStatistics::TopicStatistics(std::size_t k1_, std::size_t k2_, std::size_t vocabSize)
    : k1(k1_), k2(k2_), perWord(vocabSize) {}

void TopicStatistics::accumulate(const Document& doc, const VariationalState& vs) {
  for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
    const auto v = doc.tokens[t];
    if (v >= perWord.size()) throw std::out_of_range("token outside the vocabulary");
    Matrix& s = perWord[v];
    if (s.size() == 0) s = Matrix::Zero(static_cast<Eigen::Index>(k1), static_cast<Eigen::Index>(k2));
    const auto row = static_cast<Eigen::Index>(t);
    s.noalias() += vs.phi1.row(row).transpose() * vs.phi2.row(row);
    tokens += 1.0;
  }
}

double thetaOmegaObjective(const TopicStatistics& stats, const Matrix& theta1, const Matrix& theta2,
                           double omega) {
  const double a = 0.5 * (1.0 + omega), b = 0.5 * (1.0 - omega);
  double total = 0.0;
  for (std::size_t v = 0; v < stats.perWord.size(); ++v) {
    const Matrix& s = stats.perWord[v];
    if (s.size() == 0) continue;
    const auto col = static_cast<Eigen::Index>(v);
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      for (Eigen::Index j = 0; j < s.cols(); ++j)
        if (s(i, j) > 0.0) total += s(i, j) * std::log(std::max(a * theta1(i, col) + b * theta2(j, col), kLogFloor));
  }
  return total;
}

PenalizedThetaObjective::PenalizedThetaObjective(const TopicStatistics& stats, std::optional<double> fixedOmega)
    : stats_(stats), fixedOmega_(fixedOmega), v_(stats.perWord.size()) {}

std::size_t PenalizedThetaObjective::size() const noexcept {
  return (stats_.k1 + stats_.k2) * v_ + (fixedOmega_ ? 0 : 1);
}

Vector PenalizedThetaObjective::pack(const Matrix& theta1, const Matrix& theta2, double omega) const {
  Vector x(static_cast<Eigen::Index>(size()));
  Eigen::Index p = 0;
  for (const Matrix* t : {&theta1, &theta2})
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index v = 0; v < t->cols(); ++v) x[p++] = std::log(std::max((*t)(i, v), kThetaFloor));
  if (!fixedOmega_) {
    const double w = std::clamp(omega, 1e-9, 1.0 - 1e-9);
    x[p] = std::log(w / (1.0 - w));
  }
  return x;
}

void PenalizedThetaObjective::unpack(const Vector& x, Matrix& theta1, Matrix& theta2, double& omega) const {
  const auto k1 = static_cast<Eigen::Index>(stats_.k1), k2 = static_cast<Eigen::Index>(stats_.k2);
  const auto v = static_cast<Eigen::Index>(v_);
  theta1.resize(k1, v);
  theta2.resize(k2, v);
  Eigen::Index p = 0;
  for (Matrix* t : {&theta1, &theta2})
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index c = 0; c < v; ++c) (*t)(i, c) = std::exp(x[p++]);
  omega = fixedOmega_ ? *fixedOmega_ : 1.0 / (1.0 + std::exp(-x[p]));
}

double PenalizedThetaObjective::evaluate(const Vector& x, const Vector& penalties, Vector& grad) const {
  Matrix t1, t2;
  double omega = 0.0;
  unpack(x, t1, t2, omega);
  const double a = 0.5 * (1.0 + omega), b = 0.5 * (1.0 - omega);
  const double scale = stats_.tokens > 0.0 ? 1.0 / stats_.tokens : 1.0;
  Matrix g1 = Matrix::Zero(t1.rows(), t1.cols());
  Matrix g2 = Matrix::Zero(t2.rows(), t2.cols());
  double gOmega = 0.0;
  double value = 0.0;
  for (std::size_t v = 0; v < v_; ++v) {
    const Matrix& s = stats_.perWord[v];
    if (s.size() == 0) continue;
    const auto col = static_cast<Eigen::Index>(v);
    for (Eigen::Index i = 0; i < s.rows(); ++i)
      for (Eigen::Index j = 0; j < s.cols(); ++j) {
        const double w = s(i, j);
        if (w <= 0.0) continue;
        const double p = a * t1(i, col) + b * t2(j, col);
        if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
        const double ws = w * scale / p;
        value -= w * scale * std::log(p);
        g1(i, col) -= ws * a;
        g2(j, col) -= ws * b;
        gOmega -= ws * 0.5 * (t1(i, col) - t2(j, col));
      }
  }
  Eigen::Index r = 0;
  for (auto [t, g] : {std::pair{&t1, &g1}, std::pair{&t2, &g2}})
    for (Eigen::Index i = 0; i < t->rows(); ++i, ++r) {
      const double res = t->row(i).sum() - 1.0;
      value += 0.5 * penalties[r] * res * res;
      g->row(i).array() += penalties[r] * res;
    }

  grad.resize(x.size());
  Eigen::Index p = 0;
  for (auto [t, g] : {std::pair{&t1, &g1}, std::pair{&t2, &g2}})
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index c = 0; c < t->cols(); ++c) grad[p++] = (*g)(i, c) * (*t)(i, c);
  if (!fixedOmega_) grad[p] = gOmega * omega * (1.0 - omega);
  return value;
}

Vector PenalizedThetaObjective::rowResiduals(const Vector& x) const {
  Matrix t1, t2;
  double omega = 0.0;
  unpack(x, t1, t2, omega);
  Vector r(t1.rows() + t2.rows());
  r.head(t1.rows()) = t1.rowwise().sum().array() - 1.0;
  r.tail(t2.rows()) = t2.rowwise().sum().array() - 1.0;
  return r;
}

namespace {

void floorAndNormalize(Matrix& t) {
  t = t.cwiseMax(kThetaFloor);
  for (Eigen::Index i = 0; i < t.rows(); ++i) t.row(i) /= t.row(i).sum();
}

}  // namespace

ThetaOmegaUpdate updateThetaOmega(const TopicStatistics& stats, const Matrix& theta1, const Matrix& theta2,
                                  double omega, std::optional<double> fixedOmega, const ThetaOmegaConfig& config) {
  if (static_cast<std::size_t>(theta1.rows()) != stats.k1 || static_cast<std::size_t>(theta2.rows()) != stats.k2 ||
      static_cast<std::size_t>(theta1.cols()) != stats.perWord.size() || theta2.cols() != theta1.cols())
    throw std::invalid_argument("updateThetaOmega: statistics and theta shapes differ");
  if (fixedOmega && !(*fixedOmega >= 0.0 && *fixedOmega <= 1.0))
    throw std::invalid_argument("fixed omega must lie in [0,1]");

  ThetaOmegaUpdate out;
  out.theta1 = theta1;
  out.theta2 = theta2;
  out.omega = fixedOmega.value_or(omega);
  out.objectiveBefore = -thetaOmegaObjective(stats, theta1, theta2, out.omega);
  out.objectiveAfter = out.objectiveBefore;
  if (stats.tokens <= 0.0) return out;

  PenalizedThetaObjective objective(stats, fixedOmega);
  const Vector x0 = objective.pack(theta1, theta2, out.omega);
  const std::size_t rows = stats.k1 + stats.k2;
  auto build = [&objective](const Vector& penalties) -> optim::ObjectiveFn {
    return [&objective, penalties](const Vector& x, Vector& g) { return objective.evaluate(x, penalties, g); };
  };
  auto residuals = [&objective](const Vector& x) { return objective.rowResiduals(x); };
  const optim::PenaltyResult res = optim::penaltyLoop(build, residuals, x0, rows, config.schedule, config.lbfgs);

  Matrix t1, t2;
  double w = 0.0;
  objective.unpack(res.x, t1, t2, w);
  floorAndNormalize(t1);
  floorAndNormalize(t2);
  w = std::clamp(w, 0.0, 1.0);
  const double after = -thetaOmegaObjective(stats, t1, t2, w);
  out.feasible = res.feasible;
  out.lineSearchFailed = res.lineSearchFailed;
  if (after <= out.objectiveBefore) {
    out.theta1 = std::move(t1);
    out.theta2 = std::move(t2);
    out.omega = w;
    out.objectiveAfter = after;
  } else {
    out.keptInput = true;
  }
  return out;
}

FiniteM3Model initialModel(std::size_t k1, std::size_t k2, std::size_t vocabSize, const FitConfig& config,
                          std::size_t restart) {
  if (k1 < 1 || k2 < 1) throw std::invalid_argument("K1 and K2 must be at least 1");
  if (vocabSize < 1) throw std::invalid_argument("vocabulary must be non-empty");
  Rng rng(config.seed, 0x7e7a + restart);
  FiniteM3Model model;
  auto draw = [&](std::size_t k) {
    Matrix t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(vocabSize));
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index v = 0; v < t.cols(); ++v) t(i, v) = std::max(rng.gamma(1.0), 1e-300);
      t.row(i) /= t.row(i).sum();
    }
    return t;
  };
  model.theta1 = draw(k1);
  model.theta2 = draw(k2);
  model.alpha1 = config.initAlpha;
  model.alpha2 = config.initAlpha;
  model.omega = config.fixOmega.value_or(config.initOmega);
  return model;
}

FitResult fitFrom(FiniteM3Model model, std::span<const Document> corpus, const FitConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("fit: empty corpus");
  if (config.emIters < 1) throw std::invalid_argument("fit: emIters must be at least 1");
  if (config.fixOmega) model.omega = *config.fixOmega;
  model.validate();
  for (const auto& doc : corpus) checkDocument(model, doc);

  FitResult out;
  out.states.reserve(corpus.size());
  for (const auto& doc : corpus) out.states.push_back(uniformState(model, doc));

  for (std::size_t it = 0; it < config.emIters; ++it) {
    double total = 0.0;
    std::size_t clamped = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      EStepResult r = eStep(model, corpus[d], std::move(out.states[d]), config.eIters, config.eTol);
      out.states[d] = std::move(r.state);
      total += r.elbo;
      clamped += r.clamped ? 1 : 0;
    }
    out.clampedDocuments = clamped;
    out.elboTrace.push_back(total);
    if (it + 1 == config.emIters) break;
    if (config.emTol > 0.0 && it > 0) {
      const double prev = out.elboTrace[out.elboTrace.size() - 2];
      if (std::abs(total - prev) <= config.emTol * std::abs(total)) break;
    }

    if (config.learnAlpha && it >= config.alphaWarmup) {
      std::vector<Vector> g1, g2;
      g1.reserve(corpus.size());
      g2.reserve(corpus.size());
      for (const auto& s : out.states) {
        g1.push_back(s.gamma1);
        g2.push_back(s.gamma2);
      }
      model.alpha1 = updateAlpha(g1, model.k1(), model.alpha1).alpha;
      model.alpha2 = updateAlpha(g2, model.k2(), model.alpha2).alpha;
    }
    TopicStatistics stats(model.k1(), model.k2(), model.vocabSize());
    for (std::size_t d = 0; d < corpus.size(); ++d) stats.accumulate(corpus[d], out.states[d]);
    std::optional<double> omegaHold = config.fixOmega;
    if (!omegaHold && it < config.omegaWarmup) omegaHold = model.omega;
    ThetaOmegaUpdate up = updateThetaOmega(stats, model.theta1, model.theta2, model.omega, omegaHold, config.mstep);
    if (!up.feasible) ++out.infeasibleMSteps;
    model.theta1 = std::move(up.theta1);
    model.theta2 = std::move(up.theta2);
    model.omega = up.omega;
  }
  out.model = std::move(model);
  return out;
}

FitResult fit(std::span<const Document> corpus, std::size_t vocabSize, std::size_t k1, std::size_t k2,
              const FitConfig& config) {
  if (config.restarts < 1) throw std::invalid_argument("fit: restarts must be at least 1");
  FitResult best;
  for (std::size_t r = 0; r < config.restarts; ++r) {
    FitResult cur = fitFrom(initialModel(k1, k2, vocabSize, config, r), corpus, config);
    if (r == 0 || cur.elboTrace.back() > best.elboTrace.back()) best = std::move(cur);
  }
  return best;
}

FitConfig ldaConfig(FitConfig config) {
  config.fixOmega = 1.0;
  return config;
}

FitResult fitLda(std::span<const Document> corpus, std::size_t vocabSize, std::size_t k, const FitConfig& config) {
  return fit(corpus, vocabSize, k, 1, ldaConfig(config));
}

std::vector<double> heldOutBounds(const FiniteM3Model& model, std::span<const Document> docs,
                                  std::size_t maxIters, double tol) {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back(inferDocument(model, doc, maxIters, tol).elbo);
  return out;
}

}  // namespace m3mix
