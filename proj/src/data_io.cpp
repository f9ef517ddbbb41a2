#include "m3mix/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "m3mix/errors.hpp"

namespace m3mix {
namespace {

std::ifstream openIn(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream openOut(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> parseDouble(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::size_t Corpus::tokenCount() const {
  std::size_t n = 0;
  for (const auto& d : docs) n += d.tokens.size();
  return n;
}

Corpus readBagOfWords(std::istream& docword, std::istream* vocab) {
  std::string line;
  std::size_t lineNo = 0;
  std::int64_t header[3] = {0, 0, 0};
  for (auto& h : header) {
    ++lineNo;
    if (!std::getline(docword, line)) throw ParseError("docword: missing header", lineNo);
    std::istringstream ss(line);
    std::string extra;
    if (!(ss >> h) || (ss >> extra) || h < 0) throw ParseError("docword: malformed header value", lineNo);
  }
  const auto d = static_cast<std::size_t>(header[0]);
  const auto v = static_cast<std::size_t>(header[1]);
  const auto nnz = static_cast<std::size_t>(header[2]);

  Corpus corpus;
  corpus.vocabSize = v;
  std::vector<Document> docs(d);
  std::size_t entries = 0;
  while (std::getline(docword, line)) {
    ++lineNo;
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    std::int64_t docId = 0, wordId = 0, count = 0;
    std::string extra;
    if (!(ss >> docId >> wordId >> count) || (ss >> extra))
      throw ParseError("docword: expected 'docID wordID count'", lineNo);
    if (docId < 1 || static_cast<std::size_t>(docId) > d) throw ParseError("docword: docID out of range", lineNo);
    if (wordId < 1 || static_cast<std::size_t>(wordId) > v) throw ParseError("docword: wordID out of range", lineNo);
    if (count <= 0) throw ParseError("docword: count must be positive", lineNo);
    ++entries;
    if (entries > nnz) throw ParseError("docword: more entries than NNZ", lineNo);
    auto& tokens = docs[static_cast<std::size_t>(docId - 1)].tokens;
    tokens.insert(tokens.end(), static_cast<std::size_t>(count), static_cast<std::uint32_t>(wordId - 1));
  }
  if (entries != nnz)
    throw ParseError("docword: NNZ header says " + std::to_string(nnz) + " but found " + std::to_string(entries),
                     lineNo + 1);
  for (auto& doc : docs) {
    if (doc.tokens.empty()) ++corpus.droppedEmpty;
    else corpus.docs.push_back(std::move(doc));
  }

  if (vocab) {
    std::size_t vline = 0;
    while (std::getline(*vocab, line)) {
      ++vline;
      const std::string w = trim(line);
      if (w.empty()) continue;
      corpus.vocab.push_back(w);
    }
    if (corpus.vocab.size() != v)
      throw ParseError("vocab: expected " + std::to_string(v) + " words, found " + std::to_string(corpus.vocab.size()));
  } else {
    for (std::size_t k = 0; k < v; ++k) corpus.vocab.push_back("w" + std::to_string(k));
  }
  return corpus;
}

Corpus readBagOfWords(const std::filesystem::path& docword, const std::filesystem::path& vocab) {
  auto in = openIn(docword);
  if (vocab.empty()) return readBagOfWords(in, nullptr);
  auto vin = openIn(vocab);
  return readBagOfWords(in, &vin);
}

void writeBagOfWords(const Corpus& corpus, const std::filesystem::path& docword, const std::filesystem::path& vocab) {
  std::vector<std::map<std::uint32_t, std::size_t>> counts(corpus.docs.size());
  std::size_t nnz = 0;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    for (auto t : corpus.docs[d].tokens) ++counts[d][t];
    nnz += counts[d].size();
  }
  auto out = openOut(docword);
  out << corpus.docs.size() << '\n' << corpus.vocabSize << '\n' << nnz << '\n';
  for (std::size_t d = 0; d < counts.size(); ++d)
    for (const auto& [w, c] : counts[d]) out << d + 1 << ' ' << w + 1 << ' ' << c << '\n';
  if (!vocab.empty()) {
    auto vout = openOut(vocab);
    for (std::size_t k = 0; k < corpus.vocabSize; ++k)
      vout << (k < corpus.vocab.size() ? corpus.vocab[k] : "w" + std::to_string(k)) << '\n';
  }
}

PointCloud readPointsCsv(std::istream& in, std::optional<std::size_t> labelColumn) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lineNos;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (trim(line).empty()) continue;
    rows.push_back(splitCsv(line));
    lineNos.push_back(lineNo);
  }
  PointCloud cloud;
  if (rows.empty()) throw ParseError("points CSV: no rows");
  const std::size_t width = rows.front().size();
  if (labelColumn && *labelColumn >= width) throw ParseError("points CSV: label column beyond row width", lineNos[0]);

  auto isNumericRow = [&](const std::vector<std::string>& r) {
    for (std::size_t k = 0; k < r.size(); ++k)
      if ((!labelColumn || k != *labelColumn) && !parseDouble(r[k])) return false;
    return true;
  };
  std::size_t first = 0;
  if (!isNumericRow(rows.front())) {
    for (std::size_t k = 0; k < width; ++k)
      if (!labelColumn || k != *labelColumn) cloud.columnNames.push_back(rows.front()[k]);
    first = 1;
  }
  const std::size_t dim = width - (labelColumn ? 1 : 0);
  const std::size_t n = rows.size() - first;
  cloud.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::map<std::string, int> codes;
  std::vector<int> labels;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != width) throw ParseError("points CSV: ragged row", lineNos[r]);
    Eigen::Index col = 0;
    for (std::size_t k = 0; k < width; ++k) {
      if (labelColumn && k == *labelColumn) {
        auto [it, inserted] = codes.emplace(row[k], static_cast<int>(codes.size()));
        if (inserted) cloud.labelNames.push_back(row[k]);
        labels.push_back(it->second);
        continue;
      }
      const auto value = parseDouble(row[k]);
      if (!value) throw ParseError("points CSV: non-numeric cell '" + row[k] + "'", lineNos[r]);
      cloud.points(static_cast<Eigen::Index>(r - first), col++) = *value;
    }
  }
  if (labelColumn) cloud.labels = std::move(labels);
  if (cloud.columnNames.empty())
    for (std::size_t k = 0; k < dim; ++k) cloud.columnNames.push_back("x" + std::to_string(k));
  return cloud;
}

PointCloud readPointsCsv(const std::filesystem::path& path, std::optional<std::size_t> labelColumn) {
  auto in = openIn(path);
  return readPointsCsv(in, labelColumn);
}

void writePointsCsv(const PointCloud& cloud, const std::filesystem::path& path) {
  auto out = openOut(path);
  for (std::size_t k = 0; k < cloud.dim(); ++k)
    out << (k ? "," : "") << (k < cloud.columnNames.size() ? cloud.columnNames[k] : "x" + std::to_string(k));
  if (cloud.labels) out << ",label";
  out << '\n';
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    for (Eigen::Index k = 0; k < cloud.points.cols(); ++k) out << (k ? "," : "") << cloud.points(i, k);
    if (cloud.labels) out << ',' << (*cloud.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

PointCloud genFactorialGaussians(std::span<const Vector> means, std::span<const Matrix> covs, std::size_t perCell,
                                 std::uint64_t seed) {
  if (means.empty() || covs.empty()) throw std::invalid_argument("genFactorialGaussians: need at least one mean and one covariance");
  const auto p = means.front().size();
  std::vector<Matrix> factors;
  for (const auto& c : covs) {
    if (c.rows() != p || c.cols() != p) throw std::invalid_argument("genFactorialGaussians: dimension mismatch");
    Eigen::LLT<Matrix> llt(c);
    if (llt.info() != Eigen::Success || !isPositiveDefinite(c)) throw NumericError("genFactorialGaussians: covariance is not PD");
    factors.push_back(llt.matrixL());
  }
  for (const auto& m : means)
    if (m.size() != p) throw std::invalid_argument("genFactorialGaussians: dimension mismatch");
  Rng rng(seed, 0x6a55);
  PointCloud cloud;
  const std::size_t n = means.size() * covs.size() * perCell;
  cloud.points.resize(static_cast<Eigen::Index>(n), p);
  std::vector<int> labels;
  Eigen::Index row = 0;
  for (std::size_t m = 0; m < means.size(); ++m)
    for (std::size_t c = 0; c < covs.size(); ++c)
      for (std::size_t k = 0; k < perCell; ++k) {
        cloud.points.row(row++) = (means[m] + factors[c] * drawStandardNormal(static_cast<std::size_t>(p), rng)).transpose();
        labels.push_back(static_cast<int>(m * covs.size() + c));
      }
  cloud.labels = std::move(labels);
  for (Eigen::Index k = 0; k < p; ++k) cloud.columnNames.push_back("x" + std::to_string(k));
  return cloud;
}

namespace {

Matrix rotated(double angle, double l1, double l2) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = l1;
  d(1, 1) = l2;
  Matrix out = r * d * r.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

std::vector<Vector> defaultFactorialMeans() {
  std::vector<Vector> out;
  for (auto [x, y] : {std::pair{-4.0, -4.0}, {-4.0, 4.0}, {4.0, -4.0}, {4.0, 4.0}, {0.0, 0.0}}) {
    Vector m(2);
    m << x, y;
    out.push_back(m);
  }
  return out;
}

std::vector<Matrix> defaultFactorialCovariances() {
  // crossed ellipses; a tight blob plus one ellipse at a shared center is not separable pointwise
  return {rotated(std::numbers::pi / 4.0, 2.0, 0.1), rotated(-std::numbers::pi / 4.0, 2.0, 0.1)};
}

PointCloud genUnrelatedGaussians(std::size_t count, std::size_t perCluster, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("genUnrelatedGaussians: need at least one cluster");
  Rng rng(seed, 0x0e1a);
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(count * perCluster), 2);
  std::vector<int> labels;
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Vector mean(2);
    mean << 8.0 * static_cast<double>(k % 5) - 16.0, 8.0 * static_cast<double>(k / 5) - 4.0 * static_cast<double>((count - 1) / 5);
    const double t = static_cast<double>(k) / static_cast<double>(count);
    // sizes log-spaced over ~30x so no two clusters look alike
    const double size = 0.06 * std::pow(30.0, t);
    const double aspect = (k % 2 == 0) ? 6.0 : 1.5;
    const Matrix cov = rotated(std::numbers::pi * t * 3.0, size * aspect, size);
    const Matrix l = Eigen::LLT<Matrix>(cov).matrixL();
    for (std::size_t i = 0; i < perCluster; ++i) {
      cloud.points.row(row++) = (mean + l * drawStandardNormal(2, rng)).transpose();
      labels.push_back(static_cast<int>(k));
    }
  }
  cloud.labels = std::move(labels);
  cloud.columnNames = {"x0", "x1"};
  return cloud;
}

namespace {

Vector dirichlet(std::size_t k, double concentration, Rng& rng) {
  Vector out(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = rng.gamma(concentration);
  const double s = out.sum();
  if (s > 0.0) {
    out /= s;
  } else {
    // Every gamma draw underflowed; fall back to a uniformly chosen vertex.
    out.setZero();
    out[static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(k))] = 1.0;
  }
  return out;
}

}  // namespace

Corpus sampleCorpus(const FiniteM3Model& model, std::size_t docs, std::size_t docLen, Rng& rng) {
  model.validate();
  Corpus corpus;
  corpus.vocabSize = model.vocabSize();
  for (std::size_t k = 0; k < corpus.vocabSize; ++k) corpus.vocab.push_back("w" + std::to_string(k));
  const double a = 0.5 * (1.0 + model.omega), b = 0.5 * (1.0 - model.omega);
  std::vector<double> weights(model.vocabSize());
  for (std::size_t d = 0; d < docs; ++d) {
    const Vector pi1 = dirichlet(model.k1(), model.alpha1, rng);
    const Vector pi2 = dirichlet(model.k2(), model.alpha2, rng);
    Document doc;
    doc.tokens.reserve(docLen);
    for (std::size_t n = 0; n < docLen; ++n) {
      const auto z1 = static_cast<Eigen::Index>(rng.categorical(std::span<const double>(pi1.data(), model.k1())));
      const auto z2 = static_cast<Eigen::Index>(rng.categorical(std::span<const double>(pi2.data(), model.k2())));
      for (std::size_t v = 0; v < weights.size(); ++v) {
        const auto c = static_cast<Eigen::Index>(v);
        weights[v] = a * model.theta1(z1, c) + b * model.theta2(z2, c);
      }
      doc.tokens.push_back(static_cast<std::uint32_t>(rng.categorical(weights)));
    }
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

GeneratedCorpus genTwoFactorCorpus(std::size_t k1, std::size_t k2, std::size_t vocabSize, std::size_t docs,
                                   std::size_t docLen, double omega, double alpha1, double alpha2, std::uint64_t seed) {
  if (k1 < 1 || k2 < 1) throw std::invalid_argument("genTwoFactorCorpus: K1, K2 must be at least 1");
  if (vocabSize < k1 + k2) throw std::invalid_argument("genTwoFactorCorpus: need V >= K1 + K2");
  Rng rng(seed, 0xc0de);
  GeneratedCorpus out;
  auto& model = out.generator;
  model.theta1.resize(static_cast<Eigen::Index>(k1), static_cast<Eigen::Index>(vocabSize));
  model.theta2.resize(static_cast<Eigen::Index>(k2), static_cast<Eigen::Index>(vocabSize));
  for (Eigen::Index i = 0; i < model.theta1.rows(); ++i) model.theta1.row(i) = dirichlet(vocabSize, 0.1, rng).transpose();
  for (Eigen::Index j = 0; j < model.theta2.rows(); ++j) model.theta2.row(j) = dirichlet(vocabSize, 0.1, rng).transpose();
  model.alpha1 = alpha1;
  model.alpha2 = alpha2;
  model.omega = omega;
  out.corpus = sampleCorpus(model, docs, docLen, rng);
  return out;
}

void writeDensityGridCsv(const DensityGrid& grid, const std::filesystem::path& path) {
  auto out = openOut(path);
  if (grid.dims == 1) {
    out << "x,density\n";
    for (std::size_t i = 0; i < grid.axes[0].size(); ++i) out << grid.axes[0][i] << ',' << grid.at(i) << '\n';
  } else {
    out << "x,y,density\n";
    for (std::size_t i = 0; i < grid.axes[0].size(); ++i)
      for (std::size_t j = 0; j < grid.axes[1].size(); ++j)
        out << grid.axes[0][i] << ',' << grid.axes[1][j] << ',' << grid.at(i, j) << '\n';
  }
}

void writeMatrixCsv(const Matrix& m, const std::filesystem::path& path) {
  auto out = openOut(path);
  out << "# rows=" << m.rows() << " cols=" << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

void writeLabelsCsv(std::span<const int> labels, const std::filesystem::path& path) {
  auto out = openOut(path);
  out << "label\n";
  for (int l : labels) out << l << '\n';
}

std::vector<int> readLabelsCsv(const std::filesystem::path& path) {
  auto in = openIn(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string t = trim(line);
    if (t.empty() || (lineNo == 1 && !parseDouble(t))) continue;
    const auto v = parseDouble(t);
    if (!v || *v != std::floor(*v)) throw ParseError("labels: expected an integer", lineNo);
    labels.push_back(static_cast<int>(*v));
  }
  return labels;
}

}  // namespace m3mix
