#include "m3mix/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "m3mix/eval.hpp"
#include "m3mix/hybrid_m3.hpp"

namespace m3mix::experiments {
namespace {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

NmiComparison compareOn(const std::vector<PointCloud>& clouds, const GaussianSettings& s) {
  NmiComparison out;
  out.m3.assign(s.seeds, 0.0);
  out.dpmm.assign(s.seeds, 0.0);
  Stopwatch clock;
  parallelFor(2 * s.seeds, [&](std::size_t job) {
    const std::size_t k = job / 2;
    const PointCloud& cloud = clouds[clouds.size() == 1 ? 0 : k];
    auto data = std::make_shared<const Matrix>(cloud.points);
    ChainConfig cfg = chainConfig(cloud.points, s.firstSeed + k, s);
    if (job % 2 == 1) cfg = dpmmConfig(cfg);
    const ChainResult r = runChain(data, cfg);
    (job % 2 == 0 ? out.m3 : out.dpmm)[k] = averagedNmi(r.samples, *cloud.labels, s.nmiStride);
  });
  out.seconds = clock.seconds();
  return out;
}

}  // namespace

std::size_t threadCount() {
  if (const char* env = std::getenv("M3MIX_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(threadCount(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex errorMutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(errorMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ChainConfig chainConfig(const Matrix& data, std::uint64_t seed, const GaussianSettings& s) {
  ChainConfig cfg;
  NIWPrior prior = NIWPrior::fromData(data);
  prior.lambda0 *= s.priorScale;
  cfg.prior = prior;
  cfg.weights = s.weights;
  cfg.seed = seed;
  cfg.sweeps = s.sweeps;
  cfg.burnIn = s.burnIn;
  cfg.init = InitOptions{InitMode::Diagonal, s.initCells};
  return cfg;
}

double averagedNmi(std::span<const InfiniteM3State> samples, std::span<const int> truth, std::size_t stride) {
  if (samples.empty()) throw std::invalid_argument("averagedNmi: no samples");
  if (stride == 0) stride = 1;
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); i += stride, ++n)
    acc += nmi(jointLabels(samples[i].assignments), truth);
  return acc / static_cast<double>(n);
}

double NmiComparison::m3Mean() const { return mean(m3); }
double NmiComparison::dpmmMean() const { return mean(dpmm); }
double HybridComparison::hybridMean() const { return mean(hybrid); }
double HybridComparison::ablationMean() const { return mean(ablation); }

NmiComparison gaussianSharing(const GaussianSettings& s) {
  std::vector<PointCloud> clouds;
  for (std::size_t k = 0; k < s.seeds; ++k)
    clouds.push_back(genFactorialGaussians(defaultFactorialMeans(), defaultFactorialCovariances(), s.perCell,
                                           s.dataSeedOffset + s.firstSeed + k));
  return compareOn(clouds, s);
}

NmiComparison gaussianUnrelated(const GaussianSettings& s) {
  std::vector<PointCloud> clouds;
  for (std::size_t k = 0; k < s.seeds; ++k)
    clouds.push_back(genUnrelatedGaussians(10, s.perCell, s.dataSeedOffset + s.firstSeed + k));
  return compareOn(clouds, s);
}

NmiComparison labelledData(const PointCloud& cloud, const GaussianSettings& s) {
  if (!cloud.labels) throw std::invalid_argument("labelledData: the point cloud has no labels");
  return compareOn({cloud}, s);
}

HybridComparison hybridAblation(const GaussianSettings& s) {
  HybridComparison out;
  out.hybrid.assign(s.seeds, 0.0);
  out.ablation.assign(s.seeds, 0.0);
  std::vector<char> monotone(2 * s.seeds, 1);
  Stopwatch clock;
  parallelFor(2 * s.seeds, [&](std::size_t job) {
    const std::size_t k = job / 2;
    const PointCloud cloud = genFactorialGaussians(defaultFactorialMeans(), defaultFactorialCovariances(), s.perCell,
                                                   s.dataSeedOffset + s.firstSeed + k);
    HybridConfig cfg;
    NIWPrior prior = NIWPrior::fromData(cloud.points);
    prior.lambda0 *= s.priorScale;
    cfg.prior = prior;
    cfg.seed = s.firstSeed + k;
    cfg.sweeps = s.sweeps;
    cfg.burnIn = s.burnIn;
    const HybridResult r = hybridFit(std::make_shared<const Matrix>(cloud.points), job % 2 == 0 ? 2 : 1, cfg);
    monotone[job] = r.mlStepsMonotone ? 1 : 0;
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < r.samples.size(); i += std::max<std::size_t>(1, s.nmiStride), ++n)
      acc += nmi(jointLabels(r.samples[i].assignments), *cloud.labels);
    (job % 2 == 0 ? out.hybrid : out.ablation)[k] = acc / static_cast<double>(std::max<std::size_t>(n, 1));
  });
  out.mlStepsMonotone = std::all_of(monotone.begin(), monotone.end(), [](char c) { return c != 0; });
  out.seconds = clock.seconds();
  return out;
}

FitConfig TopicSettings::defaultFitConfig() {
  FitConfig cfg;
  cfg.emIters = 30;
  cfg.alphaWarmup = 10;
  cfg.omegaWarmup = 10;
  cfg.restarts = 4;
  return cfg;
}

std::size_t TopicComparison::m3Wins() const {
  std::size_t wins = 0;
  for (std::size_t i = 0; i < m3.size() && i < lda.size(); ++i) wins += m3[i] < lda[i] ? 1 : 0;
  return wins;
}

double heldOutPerplexity(const FiniteM3Model& model, std::span<const Document> docs) {
  const std::vector<double> bounds = heldOutBounds(model, docs);
  std::vector<std::size_t> lengths;
  lengths.reserve(docs.size());
  for (const auto& d : docs) lengths.push_back(d.tokens.size());
  return perplexity(bounds, lengths);
}

TopicComparison topics(const TopicSettings& s) {
  TopicComparison out;
  out.m3.assign(s.seeds, 0.0);
  out.lda.assign(s.seeds, 0.0);
  out.omega.assign(s.seeds, 0.0);
  std::vector<GeneratedCorpus> corpora;
  for (std::size_t k = 0; k < s.seeds; ++k)
    corpora.push_back(genTwoFactorCorpus(s.k1, s.k2, s.vocab, s.trainDocs + s.heldOutDocs, s.docLength, s.omega,
                                         s.alpha, s.alpha, s.corpusSeedOffset + s.firstSeed + k));
  Stopwatch clock;
  parallelFor(2 * s.seeds, [&](std::size_t job) {
    const std::size_t k = job / 2;
    std::span<const Document> all(corpora[k].corpus.docs);
    const auto train = all.subspan(0, s.trainDocs);
    const auto heldOut = all.subspan(s.trainDocs);
    FitConfig cfg = s.fit;
    cfg.seed = s.firstSeed + k;
    if (job % 2 == 0) {
      const FitResult r = fit(train, s.vocab, s.k1, s.k2, cfg);
      out.m3[k] = heldOutPerplexity(r.model, heldOut);
      out.omega[k] = r.model.omega;
    } else {
      const FitResult r = fitLda(train, s.vocab, s.ldaTopics, cfg);
      out.lda[k] = heldOutPerplexity(r.model, heldOut);
    }
  });
  out.seconds = clock.seconds();
  return out;
}

}  // namespace m3mix::experiments
