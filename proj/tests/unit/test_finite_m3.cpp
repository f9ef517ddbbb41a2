#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "../oracles/lda.hpp"
#include "../oracles/mc_likelihood.hpp"
#include "../support/fuzz.hpp"
#include "m3mix/data_io.hpp"
#include "m3mix/finite_m3.hpp"

using namespace m3mix;
using namespace fuzz;

namespace {

oracle::Topics toTopics(const Matrix& m) {
  oracle::Topics t(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t[r][c] = m(r, c);
  return t;
}

std::vector<unsigned> tokensOf(const Document& d) { return {d.tokens.begin(), d.tokens.end()}; }

}  // namespace

TEST_CASE("word probability blends the two topics") {
  FiniteM3Model m;
  m.theta1 = Matrix::Constant(1, 4, 0.25);
  m.theta1(0, 0) = 0.3;
  m.theta1(0, 1) = 0.2;
  m.theta2 = Matrix::Constant(1, 4, 0.3);
  m.theta2(0, 0) = 0.1;
  m.omega = 0.5;
  CHECK(wordProb(m, 0, 0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  m.omega = 1.0;
  CHECK(wordProb(m, 0, 0, 0) == 0.3);
  m.omega = 0.0;
  CHECK(wordProb(m, 0, 0, 0) == doctest::Approx(0.2));
}

TEST_CASE("model validation") {
  std::mt19937_64 gen(1);
  FiniteM3Model m = randomModel(2, 2, 5, gen);
  CHECK_NOTHROW(m.validate());
  m.omega = 1.5;
  CHECK_THROWS(m.validate());
  m.omega = 0.5;
  m.theta1(0, 0) += 0.1;
  CHECK_THROWS(m.validate());
}

TEST_CASE("single topics in both dimensions fix the posterior") {
  std::mt19937_64 gen(2);
  FiniteM3Model m = randomModel(1, 1, 6, gen);
  const Document doc = randomDoc(9, 6, gen);
  const EStepResult r = eStep(m, doc, 1, 0.0);
  CHECK(r.state.gamma1(0) == doctest::Approx(m.alpha1 + 9));
  CHECK(r.state.gamma2(0) == doctest::Approx(m.alpha2 + 9));
  CHECK(r.state.phi1.isOnes());
  CHECK(r.state.phi2.isOnes());
}

TEST_CASE("E-step bound never decreases and reaches the gamma fixed point") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k1 = 1 + gen() % 4, k2 = 1 + gen() % 3, v = 3 + gen() % 20;
    const FiniteM3Model m = randomModel(k1, k2, v, gen);
    const Document doc = randomDoc(1 + gen() % 40, v, gen);
    const EStepResult r = eStep(m, doc, 500, 1e-13);
    for (std::size_t i = 1; i < r.history.size(); ++i)
      REQUIRE(r.history[i] >= r.history[i - 1] - 1e-8 * std::abs(r.history[i - 1]));
    const Vector g1 = m.alpha1 + r.state.phi1.colwise().sum().transpose().array();
    const Vector g2 = m.alpha2 + r.state.phi2.colwise().sum().transpose().array();
    REQUIRE((g1 - r.state.gamma1).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((g2 - r.state.gamma2).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((r.state.phi1.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    REQUIRE((r.state.phi2.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("coupled single-column model matches the LDA E-step and bound") {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    FiniteM3Model m = randomModel(3, 1, 12, gen);
    m.omega = 1.0;
    const Document doc = randomDoc(25, 12, gen);
    const std::size_t iters = 30;
    const EStepResult r = eStep(m, doc, iters, 0.0);
    const auto q = oracle::ldaEStep(toTopics(m.theta1), m.alpha1, tokensOf(doc), r.iters);
    for (std::size_t n = 0; n < doc.tokens.size(); ++n)
      for (std::size_t i = 0; i < 3; ++i) REQUIRE(std::abs(r.state.phi1(n, i) - q.phi[n][i]) < 1e-10);
    // the dimension-2 terms of a single-topic dimension vanish
    REQUIRE(std::abs(r.elbo - oracle::ldaElbo(toTopics(m.theta1), m.alpha1, tokensOf(doc), q)) < 1e-8);
  }
}

TEST_CASE("bound is invariant to a vocabulary permutation") {
  std::mt19937_64 gen(5);
  const FiniteM3Model m = randomModel(3, 2, 8, gen);
  const Document doc = randomDoc(20, 8, gen);
  std::vector<std::uint32_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), gen);
  FiniteM3Model p = m;
  Document pd = doc;
  for (std::uint32_t v = 0; v < 8; ++v) {
    p.theta1.col(perm[v]) = m.theta1.col(v);
    p.theta2.col(perm[v]) = m.theta2.col(v);
  }
  for (auto& t : pd.tokens) t = perm[t];
  const EStepResult a = eStep(m, doc, 50, 0.0), b = eStep(p, pd, 50, 0.0);
  CHECK(std::abs(a.elbo - b.elbo) < 1e-12 * std::abs(a.elbo));
}

TEST_CASE("bound stays finite under extreme topics") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> z(0.0, 8.0);
  for (int trial = 0; trial < 1000; ++trial) {
    FiniteM3Model m = randomModel(2, 2, 5, gen);
    for (Eigen::Index i = 0; i < m.theta1.size(); ++i) m.theta1.data()[i] = std::exp(z(gen));
    for (Eigen::Index i = 0; i < m.theta2.size(); ++i) m.theta2.data()[i] = std::exp(z(gen));
    for (Eigen::Index r = 0; r < 2; ++r) {
      m.theta1.row(r) /= m.theta1.row(r).sum();
      m.theta2.row(r) /= m.theta2.row(r).sum();
    }
    const EStepResult r = eStep(m, randomDoc(6, 5, gen), 50, 1e-10);
    REQUIRE(std::isfinite(r.elbo));
  }
}

TEST_CASE("bound never exceeds the Monte Carlo document likelihood") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t v = 2 + gen() % 4;
    const FiniteM3Model m = randomModel(2, 2, v, gen);
    const Document doc = randomDoc(1 + gen() % 3, v, gen);
    const EStepResult r = inferDocument(m, doc);
    const auto mc = oracle::documentLikelihood(
        [&](std::size_t i, std::size_t j, unsigned w) { return wordProb(m, i, j, w); }, 2, 2, m.alpha1, m.alpha2,
        tokensOf(doc), 200000, 100 + trial);
    REQUIRE(r.elbo <= std::log(mc.mean + 3.0 * mc.standardError));
  }
}

TEST_CASE("empty document keeps the prior") {
  std::mt19937_64 gen(8);
  const FiniteM3Model m = randomModel(3, 2, 5, gen);
  const EStepResult r = inferDocument(m, Document{});
  CHECK((r.state.gamma1.array() - m.alpha1).abs().maxCoeff() < 1e-15);
  CHECK((r.state.gamma2.array() - m.alpha2).abs().maxCoeff() < 1e-15);
  CHECK(std::isfinite(r.elbo));
  CHECK(std::abs(r.elbo) < 1e-12);
}

TEST_CASE("per-word bound of a repeated word approaches zero from below") {
  FiniteM3Model m;
  m.theta1 = Matrix::Constant(2, 4, 0.25);
  m.theta1.row(0) << 1.0, 0.0, 0.0, 0.0;
  m.theta2 = Matrix::Constant(1, 4, 0.25);
  m.omega = 1.0;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t n : {5, 50, 500, 5000}) {
    Document d;
    d.tokens.assign(n, 0);
    const double perWord = inferDocument(m, d).elbo / static_cast<double>(n);
    CHECK(perWord < 0.0);
    CHECK(perWord > prev);
    prev = perWord;
  }
  CHECK(prev > -0.01);
}

TEST_CASE("alpha update agrees with a grid search") {
  std::mt19937_64 gen(9);
  for (double truth : {0.2, 0.7, 2.5}) {
    const std::size_t k = 4;
    std::vector<Vector> gammas;
    std::vector<std::vector<double>> raw;
    for (int d = 0; d < 200; ++d) {
      const auto pi = oracle::dirichlet(k, truth, gen);
      Vector g(k);
      for (std::size_t i = 0; i < k; ++i) g(i) = 0.01 + 30.0 * pi[i];
      gammas.push_back(g);
      raw.emplace_back(g.data(), g.data() + k);
    }
    double bestA = 0.0, bestL = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 10000; ++i) {
      const double a = i * 1e-3;
      const double l = oracle::alphaBound(raw, a);
      if (l > bestL) bestL = l, bestA = a;
    }
    for (double start : {0.05, 1.0, 5.0}) {
      const AlphaUpdate u = updateAlpha(gammas, k, start);
      CHECK(u.alpha > 0.0);
      CHECK(std::abs(u.alpha - bestA) < 1e-2);
      CHECK(oracle::alphaBound(raw, u.alpha) >= oracle::alphaBound(raw, start) - 1e-9);
      CHECK(alphaObjective(gammas, u.alpha) == doctest::Approx(oracle::alphaBound(raw, u.alpha)));
    }
  }
}

TEST_CASE("alpha update with a single topic returns the current value") {
  const std::vector<Vector> gammas{Vector::Constant(1, 3.0), Vector::Constant(1, 7.0)};
  CHECK(updateAlpha(gammas, 1, 0.37).alpha == 0.37);
}

namespace {

}  // namespace

TEST_CASE("penalized objective gradient matches finite differences") {
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> u(0.5, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const FiniteM3Model m = randomModel(2, 2, 5, gen);
    const TopicStatistics s = randomStats(2, 2, 5, gen, m);
    const bool fixOmega = trial % 4 == 0;
    const PenalizedThetaObjective obj(s, fixOmega ? std::optional<double>(0.3) : std::nullopt);
    Vector pen(4);
    for (int i = 0; i < 4; ++i) pen(i) = u(gen);
    // a point off the simplex so the penalty terms are active
    const Vector x = obj.pack(randomStochastic(2, 5, gen) * 1.1, randomStochastic(2, 5, gen) * 0.9, 0.2 + 0.6 * u(gen) / 50);
    const optim::ObjectiveFn f = [&](const Vector& y, Vector& g) { return obj.evaluate(y, pen, g); };
    REQUIRE(optim::gradCheck(f, x, 1e-5) < 1e-5);
  }
}

TEST_CASE("penalized objective value matches the bound term") {
  std::mt19937_64 gen(11);
  const FiniteM3Model m = randomModel(2, 3, 6, gen);
  const TopicStatistics s = randomStats(2, 3, 6, gen, m);
  const PenalizedThetaObjective obj(s, std::nullopt);
  const Vector x = obj.pack(m.theta1, m.theta2, m.omega);
  Vector g;
  const double f = obj.evaluate(x, Vector::Constant(5, 7.0), g);
  CHECK(f == doctest::Approx(-thetaOmegaObjective(s, m.theta1, m.theta2, m.omega) / s.tokens).epsilon(1e-12));
  CHECK(obj.rowResiduals(x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coupled single-column M-step is the closed-form LDA update") {
  std::mt19937_64 gen(12);
  FiniteM3Model m = randomModel(3, 1, 7, gen);
  m.omega = 1.0;
  std::vector<Document> docs;
  std::vector<std::vector<unsigned>> raw;
  std::vector<oracle::LdaPosterior> qs;
  TopicStatistics s(3, 1, 7);
  for (int d = 0; d < 30; ++d) {
    docs.push_back(randomDoc(20, 7, gen));
    const EStepResult r = eStep(m, docs.back(), 100, 1e-12);
    s.accumulate(docs.back(), r.state);
    raw.push_back(tokensOf(docs.back()));
    oracle::LdaPosterior q;
    q.phi.assign(static_cast<std::size_t>(r.state.phi1.rows()), std::vector<double>(3));
    for (Eigen::Index n = 0; n < r.state.phi1.rows(); ++n)
      for (int i = 0; i < 3; ++i) q.phi[n][i] = r.state.phi1(n, i);
    qs.push_back(q);
  }
  ThetaOmegaConfig cfg;
  cfg.lbfgs.maxIters = 2000;
  cfg.lbfgs.fTol = 0.0;
  const ThetaOmegaUpdate up = updateThetaOmega(s, m.theta1, m.theta2, 1.0, 1.0, cfg);
  const auto want = oracle::ldaMStep(raw, qs, 3, 7);
  for (int i = 0; i < 3; ++i)
    for (int v = 0; v < 7; ++v) CHECK(std::abs(up.theta1(i, v) - want[i][v]) < 1e-4);
  CHECK(up.objectiveAfter <= up.objectiveBefore);
}

TEST_CASE("M-step never worsens the objective") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const FiniteM3Model m = randomModel(3, 2, 10, gen);
    const TopicStatistics s = randomStats(3, 2, 10, gen, m);
    const ThetaOmegaUpdate up = updateThetaOmega(s, m.theta1, m.theta2, m.omega, std::nullopt);
    REQUIRE(up.objectiveAfter <= up.objectiveBefore + 1e-9 * std::abs(up.objectiveBefore));
    FiniteM3Model out = m;
    out.theta1 = up.theta1;
    out.theta2 = up.theta2;
    out.omega = up.omega;
    REQUIRE_NOTHROW(out.validate());
  }
}

namespace {

std::vector<Document> smallCorpus(std::uint64_t seed, std::size_t docs = 40) {
  return genTwoFactorCorpus(4, 2, 30, docs, 30, 0.5, 0.3, 0.3, seed).corpus.docs;
}

}  // namespace

TEST_CASE("corpus bound trace never decreases") {
  FitConfig cfg;
  cfg.emIters = 15;
  cfg.seed = 3;
  const auto docs = smallCorpus(21);
  const FitResult r = fit(docs, 30, 4, 2, cfg);
  REQUIRE(r.elboTrace.size() == 15);
  for (std::size_t i = 1; i < r.elboTrace.size(); ++i)
    CHECK(r.elboTrace[i] >= r.elboTrace[i - 1] - 1e-6 * std::abs(r.elboTrace[i - 1]));
}

TEST_CASE("training trace is reproduced by re-scoring the training documents") {
  FitConfig cfg;
  cfg.emIters = 8;
  const auto docs = smallCorpus(22, 20);
  const FitResult r = fit(docs, 30, 4, 2, cfg);
  double fromStates = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) fromStates += elbo(r.model, docs[d], r.states[d]);
  CHECK(fromStates == doctest::Approx(r.elboTrace.back()).epsilon(1e-10));
  const auto bounds = heldOutBounds(r.model, docs);
  const double rescored = std::accumulate(bounds.begin(), bounds.end(), 0.0);
  CHECK(rescored == doctest::Approx(r.elboTrace.back()).epsilon(1e-3));
}

TEST_CASE("identical single-word documents concentrate a topic on that word") {
  std::vector<Document> docs(10);
  for (auto& d : docs) d.tokens.assign(5, 3);
  FitConfig cfg;
  cfg.emIters = 20;
  const FitResult r = fit(docs, 6, 2, 2, cfg);
  CHECK(r.model.theta1.col(3).maxCoeff() > 0.99);
}

TEST_CASE("fit is deterministic given the seed") {
  FitConfig cfg;
  cfg.emIters = 4;
  cfg.seed = 9;
  const auto docs = smallCorpus(23, 15);
  const FitResult a = fit(docs, 30, 3, 2, cfg), b = fit(docs, 30, 3, 2, cfg);
  CHECK(a.elboTrace == b.elboTrace);
  CHECK(a.model.theta1 == b.model.theta1);
  cfg.seed = 10;
  CHECK(fit(docs, 30, 3, 2, cfg).elboTrace != a.elboTrace);
}

TEST_CASE("fixed coupling with one column reproduces the LDA baseline") {
  FitConfig cfg;
  cfg.emIters = 10;
  cfg.seed = 4;
  const auto all = smallCorpus(24, 50);
  const std::span<const Document> train(all.data(), 40), test(all.data() + 40, 10);
  FitConfig fixedCfg = cfg;
  fixedCfg.fixOmega = 1.0;
  const FitResult a = fit(train, 30, 5, 1, fixedCfg);
  const FitResult b = fitLda(train, 30, 5, cfg);
  for (const auto& doc : test) {
    const Vector pa = predictiveWordDistribution(a.model, inferDocument(a.model, doc).state);
    const Vector pb = predictiveWordDistribution(b.model, inferDocument(b.model, doc).state);
    REQUIRE((pa - pb).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("restarts keep the best training bound") {
  FitConfig cfg;
  cfg.emIters = 5;
  const auto docs = smallCorpus(25, 20);
  double bestSingle = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < 3; ++r)
    bestSingle = std::max(bestSingle, fitFrom(initialModel(3, 2, 30, cfg, r), docs, cfg).elboTrace.back());
  cfg.restarts = 3;
  CHECK(fit(docs, 30, 3, 2, cfg).elboTrace.back() == bestSingle);
  cfg.restarts = 0;
  CHECK_THROWS(fit(docs, 30, 3, 2, cfg));
}

TEST_CASE("fit rejects bad input") {
  FitConfig cfg;
  CHECK_THROWS(fit({}, 10, 2, 2, cfg));
  std::vector<Document> docs(1);
  docs[0].tokens = {12};
  CHECK_THROWS(fit(docs, 10, 2, 2, cfg));
}
