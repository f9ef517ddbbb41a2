#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m3mix/eval.hpp"
#include "m3mix/finite_m3.hpp"
#include "m3mix/gaussian.hpp"
#include "m3mix/rng.hpp"

namespace m3mix {

struct Corpus {
  std::vector<Document> docs;
  std::vector<std::string> vocab;
  std::size_t vocabSize = 0;
  std::size_t droppedEmpty = 0;  // document ids with no entries, skipped while reading

  std::size_t tokenCount() const;
};

// UCI bag-of-words: docword has three header lines (D, V, NNZ) followed by
// "docID wordID count" triples with 1-based ids; vocab has one word per line.
// An empty vocab path names the words w0..w{V-1}. Throws ParseError with the
// offending line number.
Corpus readBagOfWords(const std::filesystem::path& docword, const std::filesystem::path& vocab);
Corpus readBagOfWords(std::istream& docword, std::istream* vocab);
void writeBagOfWords(const Corpus& corpus, const std::filesystem::path& docword, const std::filesystem::path& vocab);

struct PointCloud {
  Matrix points;                                // N x dim
  std::optional<std::vector<int>> labels;       // factor codes, in order of first appearance
  std::vector<std::string> labelNames;          // code -> original label text
  std::vector<std::string> columnNames;

  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
};

// Numeric CSV; the first row is a header when any of its non-label cells is not a
// number. labelColumn is 0-based. Throws ParseError on ragged rows.
PointCloud readPointsCsv(const std::filesystem::path& path, std::optional<std::size_t> labelColumn = std::nullopt);
PointCloud readPointsCsv(std::istream& in, std::optional<std::size_t> labelColumn = std::nullopt);
void writePointsCsv(const PointCloud& cloud, const std::filesystem::path& path);

// perCell points from N(mean_m, cov_c) for every pair, label m * C + c.
PointCloud genFactorialGaussians(std::span<const Vector> means, std::span<const Matrix> covs, std::size_t perCell,
                                 std::uint64_t seed);

// Five means at (+-4, +-4) and (0, 0); covariances diag(2, 0.1) rotated by +45 and -45 degrees.
std::vector<Vector> defaultFactorialMeans();
std::vector<Matrix> defaultFactorialCovariances();

// `count` clusters that share neither mean nor covariance: means on a 5-column grid
// with spacing 8, each covariance its own rotation and scale. Labels 0..count-1.
PointCloud genUnrelatedGaussians(std::size_t count, std::size_t perCluster, std::uint64_t seed);

struct GeneratedCorpus {
  Corpus corpus;
  FiniteM3Model generator;
};

// Draws every document from `model`: pi1, pi2 from symmetric Dirichlets with the
// model's alphas, then per token (z1, z2) and a word from wordProb.
Corpus sampleCorpus(const FiniteM3Model& model, std::size_t docs, std::size_t docLen, Rng& rng);

// Theta rows from Dirichlet(0.1), then sampleCorpus. Requires V >= K1 + K2.
GeneratedCorpus genTwoFactorCorpus(std::size_t k1, std::size_t k2, std::size_t vocabSize, std::size_t docs,
                                   std::size_t docLen, double omega, double alpha1, double alpha2, std::uint64_t seed);

// CSV artifacts.
void writeDensityGridCsv(const DensityGrid& grid, const std::filesystem::path& path);
void writeMatrixCsv(const Matrix& m, const std::filesystem::path& path);
void writeLabelsCsv(std::span<const int> labels, const std::filesystem::path& path);
std::vector<int> readLabelsCsv(const std::filesystem::path& path);

}  // namespace m3mix
