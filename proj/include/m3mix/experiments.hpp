#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "m3mix/core_types.hpp"
#include "m3mix/data_io.hpp"
#include "m3mix/finite_m3.hpp"
#include "m3mix/infinite_m3.hpp"

namespace m3mix::experiments {

// Runs fn(0..n-1) on up to M3MIX_THREADS threads (default: hardware concurrency).
// Results must be written to per-index slots; the order of execution is unspecified.
void parallelFor(std::size_t n, const std::function<void(std::size_t)>& fn);
std::size_t threadCount();

struct GaussianSettings {
  std::size_t seeds = 5;
  std::uint64_t firstSeed = 1;
  std::uint64_t dataSeedOffset = 100;
  std::size_t perCell = 100;
  double priorScale = 0.1;  // Lambda0 = priorScale * data covariance
  ShareWeights weights{0.5, 0.25, 0.25};
  std::size_t initCells = 10;
  std::size_t sweeps = 200;
  std::size_t burnIn = 100;
  std::size_t nmiStride = 5;  // every k-th retained sample enters the NMI average
};

// Chain settings shared by M3 and the DPMM baseline.
ChainConfig chainConfig(const Matrix& data, std::uint64_t seed, const GaussianSettings& s);

// Mean over retained samples (every stride-th) of NMI(joint labels, truth).
double averagedNmi(std::span<const InfiniteM3State> samples, std::span<const int> truth, std::size_t stride);

struct NmiComparison {
  std::vector<double> m3;
  std::vector<double> dpmm;
  double seconds = 0.0;

  double m3Mean() const;
  double dpmmMean() const;
};

// 5 means x 2 covariances, labels m * 2 + c.
NmiComparison gaussianSharing(const GaussianSettings& s = {});
// 10 unrelated Gaussians.
NmiComparison gaussianUnrelated(const GaussianSettings& s = {});
// Labelled point cloud (e.g. Iris); the data are fixed, only the chain seed varies.
NmiComparison labelledData(const PointCloud& cloud, const GaussianSettings& s = {});

struct HybridComparison {
  std::vector<double> hybrid;    // K2 = 2
  std::vector<double> ablation;  // K2 = 1
  bool mlStepsMonotone = true;
  double seconds = 0.0;

  double hybridMean() const;
  double ablationMean() const;
};

HybridComparison hybridAblation(const GaussianSettings& s = {});

struct TopicSettings {
  std::size_t seeds = 5;
  std::uint64_t firstSeed = 1;
  std::uint64_t corpusSeedOffset = 1000;
  std::size_t k1 = 10;
  std::size_t k2 = 2;
  std::size_t vocab = 500;
  std::size_t trainDocs = 200;
  std::size_t heldOutDocs = 50;
  std::size_t docLength = 100;
  double omega = 0.5;
  double alpha = 0.1;
  std::size_t ldaTopics = 12;
  FitConfig fit = defaultFitConfig();

  static FitConfig defaultFitConfig();
};

struct TopicComparison {
  std::vector<double> m3;   // held-out perplexity
  std::vector<double> lda;
  std::vector<double> omega;  // learned sharing weight per seed
  double seconds = 0.0;

  std::size_t m3Wins() const;
};

TopicComparison topics(const TopicSettings& s = {});

// Held-out perplexity from per-document bounds.
double heldOutPerplexity(const FiniteM3Model& model, std::span<const Document> docs);

}  // namespace m3mix::experiments
