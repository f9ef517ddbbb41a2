// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../oracles/mc_likelihood.hpp"
#include "../support/fuzz.hpp"
#include "m3mix/data_io.hpp"
#include "m3mix/experiments.hpp"
#include "m3mix/finite_m3.hpp"
#include "m3mix/infinite_m3.hpp"
#include "m3mix/optim.hpp"

using namespace m3mix;
namespace ex = m3mix::experiments;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The synthetic topic corpus of the topic experiment, first seed.
struct TopicCorpus {
  std::vector<Document> train, heldOut;
};

TopicCorpus topicCorpus() {
  const ex::TopicSettings s;
  GeneratedCorpus g = genTwoFactorCorpus(s.k1, s.k2, s.vocab, s.trainDocs + s.heldOutDocs, s.docLength, s.omega,
                                         s.alpha, s.alpha, s.corpusSeedOffset + s.firstSeed);
  TopicCorpus c;
  c.train.assign(g.corpus.docs.begin(), g.corpus.docs.begin() + static_cast<long>(s.trainDocs));
  c.heldOut.assign(g.corpus.docs.begin() + static_cast<long>(s.trainDocs), g.corpus.docs.end());
  return c;
}

Outcome gaussianFactorial() {
  const ex::NmiComparison share = ex::gaussianSharing();
  const ex::NmiComparison unrel = ex::gaussianUnrelated();
  Outcome o;
  const bool a = share.m3Mean() >= share.dpmmMean() && share.m3Mean() >= 0.65 && share.seconds < 300;
  const bool b = std::abs(unrel.m3Mean() - unrel.dpmmMean()) <= 0.05 && unrel.seconds < 300;
  o.pass = a && b;
  o.detail = fmt("sharing M3 %.3f vs DPMM %.3f (%.0fs) %s; unrelated M3 %.3f vs DPMM %.3f (%.0fs) %s",
                 share.m3Mean(), share.dpmmMean(), share.seconds, a ? "ok" : "FAIL", unrel.m3Mean(),
                 unrel.dpmmMean(), unrel.seconds, b ? "ok" : "FAIL");
  return o;
}

Outcome iris() {
  const PointCloud cloud = readPointsCsv(M3MIX_IRIS_CSV, 4);
  const ex::NmiComparison r = ex::labelledData(cloud);
  Outcome o;
  o.pass = r.m3Mean() >= 0.62 && r.m3Mean() <= 0.82 && r.m3Mean() >= r.dpmmMean() - 0.02 && r.seconds < 120;
  o.detail = fmt("M3 %.3f vs DPMM %.3f (%.0fs)", r.m3Mean(), r.dpmmMean(), r.seconds);
  return o;
}

Outcome topicSuperiority() {
  const ex::TopicComparison r = ex::topics();
  Outcome o;
  o.pass = r.m3Wins() >= 4 && r.seconds < 600;
  o.detail = fmt("M3 lower perplexity on %zu/5 seeds (%.0fs):", r.m3Wins(), r.seconds);
  for (std::size_t i = 0; i < r.m3.size(); ++i) o.detail += fmt(" %.1f/%.1f", r.m3[i], r.lda[i]);
  return o;
}

Outcome degeneracy() {
  const TopicCorpus c = topicCorpus();
  FitConfig cfg = ex::TopicSettings::defaultFitConfig();
  cfg.restarts = 1;
  cfg.seed = 1;
  FitConfig fixed = cfg;
  fixed.fixOmega = 1.0;
  const FitResult a = fit(c.train, 500, 12, 1, fixed);
  const FitResult b = fitLda(c.train, 500, 12, cfg);
  double worst = 0.0;
  for (const auto& doc : c.heldOut) {
    const Vector pa = predictiveWordDistribution(a.model, inferDocument(a.model, doc).state);
    const Vector pb = predictiveWordDistribution(b.model, inferDocument(b.model, doc).state);
    worst = std::max(worst, (pa - pb).cwiseAbs().maxCoeff());
  }

  const PointCloud pts = genFactorialGaussians(defaultFactorialMeans(), defaultFactorialCovariances(), 100, 101);
  ChainConfig chain = ex::chainConfig(pts.points, 1, ex::GaussianSettings{});
  chain.weights = ShareWeights::coupled();
  chain.burnIn = 0;
  chain.sweeps = 100;
  const ChainResult r = runChain(std::make_shared<const Matrix>(pts.points), chain);
  std::size_t offDiagonal = 0;
  for (const auto& s : r.samples)
    for (const auto& z : s.assignments) offDiagonal += z.z1 != z.z2;
  for (std::size_t i = 0; i < r.trace.k1.size(); ++i) offDiagonal += r.trace.k1[i] != r.trace.k2[i];

  Outcome o;
  o.pass = worst < 1e-6 && offDiagonal == 0 && r.samples.size() == chain.sweeps;
  o.detail = fmt("max predictive difference %.2e; off-diagonal assignments over %zu sweeps: %zu", worst,
                 r.samples.size(), offDiagonal);
  return o;
}

Outcome normalization() {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  bool nonNegative = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = fuzz::randomTable(gen);
    const double w = u(gen), w1 = u(gen) * (1 - w);
    const Matrix m = jointConditionalWeights(fuzz::tableOf(n), Concentration(0.05 + 10 * u(gen)),
                                             ShareWeights(w, w1, 1 - w - w1), 1 + gen() % 5);
    worst = std::max(worst, std::abs(m.sum() - 1.0));
    nonNegative = nonNegative && m.minCoeff() >= 0.0;
  }
  Outcome o;
  o.pass = worst <= 1e-12 && nonNegative;
  o.detail = fmt("max |sum - 1| over 1000 tables %.2e", worst);
  return o;
}

Outcome optimizer() {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.5, 50.0);
  double worstGrad = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k1 = 1 + gen() % 3, k2 = 1 + gen() % 3, v = 3 + gen() % 6;
    const FiniteM3Model m = fuzz::randomModel(k1, k2, v, gen);
    const TopicStatistics s = fuzz::randomStats(k1, k2, v, gen, m);
    const PenalizedThetaObjective obj(s, trial % 4 == 0 ? std::optional<double>(0.3) : std::nullopt);
    Vector pen(static_cast<Eigen::Index>(k1 + k2));
    for (Eigen::Index i = 0; i < pen.size(); ++i) pen(i) = u(gen);
    const Vector x = obj.pack(fuzz::randomStochastic(k1, v, gen) * 1.1, fuzz::randomStochastic(k2, v, gen) * 0.9,
                              0.2 + 0.6 * u(gen) / 50);
    const optim::ObjectiveFn f = [&](const Vector& y, Vector& g) { return obj.evaluate(y, pen, g); };
    worstGrad = std::max(worstGrad, optim::gradCheck(f, x, 1e-5));
  }

  Vector x0(2);
  x0 << -1.2, 1.0;
  optim::LbfgsConfig rcfg;
  rcfg.gradTol = 1e-10;
  const optim::LbfgsResult rosen = optim::lbfgsMinimize(fuzz::rosenbrock, x0, rcfg);
  const double rosenErr = (rosen.x - Vector::Ones(2)).cwiseAbs().maxCoeff();

  double worstNorm = 0.0;
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = fuzz::randomSpd(50, 1e3, gen);
    Vector b(50);
    for (int i = 0; i < 50; ++i) b(i) = z(gen);
    const optim::ObjectiveFn f = [&](const Vector& x, Vector& g) {
      g = A * x - b;
      return 0.5 * x.dot(A * x) - b.dot(x);
    };
    optim::LbfgsConfig cfg;
    cfg.maxIters = 1000;
    worstNorm = std::max(worstNorm, optim::lbfgsMinimize(f, Vector::Zero(50), cfg).gradNorm);
  }
  Outcome o;
  o.pass = worstGrad < 1e-5 && rosenErr < 1e-5 && worstNorm < 1e-6;
  o.detail = fmt("max gradient relative error %.2e; Rosenbrock error %.2e; max quadratic gradient norm %.2e",
                 worstGrad, rosenErr, worstNorm);
  return o;
}

Outcome elboContracts() {
  std::mt19937_64 gen(7);
  double worstDrop = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k1 = 1 + gen() % 4, k2 = 1 + gen() % 3, v = 3 + gen() % 20;
    const FiniteM3Model m = fuzz::randomModel(k1, k2, v, gen);
    const Document doc = fuzz::randomDoc(1 + gen() % 40, v, gen);
    const EStepResult r = eStep(m, doc, 500, 1e-13);
    for (std::size_t i = 1; i < r.history.size(); ++i)
      worstDrop = std::max(worstDrop, (r.history[i - 1] - r.history[i]) / std::abs(r.history[i - 1]));
  }

  const TopicCorpus c = topicCorpus();
  FitConfig cfg = ex::TopicSettings::defaultFitConfig();
  cfg.restarts = 1;
  const FitResult r = fit(c.train, 500, 10, 2, cfg);
  double worstTrace = 0.0;
  for (std::size_t i = 1; i < r.elboTrace.size(); ++i)
    worstTrace = std::max(worstTrace, (r.elboTrace[i - 1] - r.elboTrace[i]) / std::abs(r.elboTrace[i - 1]));
  Outcome o;
  o.pass = worstDrop <= 1e-8 && worstTrace <= 1e-6;
  o.detail = fmt("largest relative E-step drop %.2e; largest relative corpus trace drop %.2e over %zu iterations",
                 worstDrop, worstTrace, r.elboTrace.size());
  return o;
}

Outcome bruteForceBound() {
  std::mt19937_64 gen(8);
  std::size_t violations = 0;
  double tightest = -1e300;
  const int cases = 20;
  for (int trial = 0; trial < cases; ++trial) {
    const std::size_t v = 2 + gen() % 4;
    const FiniteM3Model m = fuzz::randomModel(2, 2, v, gen);
    const Document doc = fuzz::randomDoc(1 + gen() % 3, v, gen);
    const EStepResult r = inferDocument(m, doc);
    const auto mc = oracle::documentLikelihood(
        [&](std::size_t i, std::size_t j, unsigned w) { return wordProb(m, i, j, w); }, 2, 2, m.alpha1, m.alpha2,
        std::vector<unsigned>(doc.tokens.begin(), doc.tokens.end()), 200000, 1000 + trial);
    const double upper = std::log(mc.mean + 3.0 * mc.standardError);
    violations += r.elbo > upper;
    tightest = std::max(tightest, r.elbo - std::log(mc.mean));
  }
  Outcome o;
  o.pass = violations == 0;
  o.detail = fmt("%zu/%d micro-instances above the bound; largest ELBO - log MC mean %.3e", violations, cases, tightest);
  return o;
}

Outcome hybrid() {
  const ex::HybridComparison r = ex::hybridAblation();
  Outcome o;
  o.pass = r.mlStepsMonotone && r.hybridMean() > r.ablationMean();
  o.detail = fmt("steps monotone: %s; NMI K2=2 %.3f vs K2=1 %.3f (%.0fs)", r.mlStepsMonotone ? "yes" : "no",
                 r.hybridMean(), r.ablationMean(), r.seconds);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Gaussian factorial NMI", gaussianFactorial},
      {"Iris NMI", iris},
      {"topic model perplexity vs LDA", topicSuperiority},
      {"degenerate settings", degeneracy},
      {"joint conditional normalization", normalization},
      {"optimizer", optimizer},
      {"ELBO monotonicity", elboContracts},
      {"bound below Monte Carlo likelihood", bruteForceBound},
      {"hybrid M3", hybrid},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s  [%s] %.1fs\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
