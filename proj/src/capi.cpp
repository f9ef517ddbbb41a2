#include "m3mix/m3mix.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "m3mix/data_io.hpp"
#include "m3mix/errors.hpp"
#include "m3mix/eval.hpp"
#include "m3mix/experiments.hpp"
#include "m3mix/finite_m3.hpp"
#include "m3mix/hybrid_m3.hpp"
#include "m3mix/infinite_m3.hpp"
#include "m3mix/serialize.hpp"

struct m3mix_points {
  m3mix::PointCloud cloud;
};

struct m3mix_corpus {
  m3mix::Corpus corpus;
};

struct m3mix_finite_model {
  m3mix::FiniteM3Model model;
  std::vector<double> trace;
};

struct m3mix_chain {
  bool hybrid = false;
  std::size_t points = 0;
  std::vector<m3mix::InfiniteM3State> infinite;
  std::vector<m3mix::HybridState> hybridSamples;
  m3mix::ChainTrace trace;
};

namespace {

thread_local std::string lastError;

m3mix_status fail(m3mix_status status, const std::string& message) {
  lastError = message;
  return status;
}

template <typename F>
m3mix_status guarded(F&& body) {
  try {
    body();
    lastError.clear();
    return M3MIX_OK;
  } catch (const m3mix::UnsupportedVersionError& e) {
    return fail(M3MIX_ERR_UNSUPPORTED_VERSION, e.what());
  } catch (const m3mix::ParseError& e) {
    return fail(M3MIX_ERR_PARSE, e.what());
  } catch (const m3mix::NumericError& e) {
    return fail(M3MIX_ERR_NUMERIC, e.what());
  } catch (const m3mix::IoError& e) {
    return fail(M3MIX_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(M3MIX_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(M3MIX_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(M3MIX_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(M3MIX_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(M3MIX_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(M3MIX_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(M3MIX_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

char* copyString(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

m3mix::ShareWeights weightsOf(const m3mix_chain_options& o) {
  try {
    return m3mix::ShareWeights(o.omega, o.omega1, o.omega2);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("invalid sharing weights: omega + omega1 + omega2 must equal 1, each in [0,1] (") +
                                e.what() + ")");
  }
}

m3mix::NIWPrior priorOf(const m3mix::Matrix& data, double scale) {
  require(scale > 0.0, "prior_scale must be positive");
  m3mix::NIWPrior prior = m3mix::NIWPrior::fromData(data);
  prior.lambda0 *= scale;
  return prior;
}

m3mix::FitConfig fitConfigOf(const m3mix_finite_options* options) {
  m3mix_finite_options o;
  if (options) {
    o = *options;
  } else {
    m3mix_finite_options_default(&o);
  }
  m3mix::FitConfig cfg;
  cfg.emIters = o.em_iters;
  cfg.eIters = o.e_iters;
  cfg.eTol = o.e_tol;
  if (o.fix_omega) cfg.fixOmega = o.omega;
  cfg.initOmega = o.omega;
  cfg.seed = o.seed;
  cfg.initAlpha = o.init_alpha;
  cfg.learnAlpha = o.learn_alpha != 0;
  cfg.alphaWarmup = o.alpha_warmup;
  cfg.omegaWarmup = o.omega_warmup;
  cfg.restarts = o.restarts;
  require(o.omega >= 0.0 && o.omega <= 1.0, "omega must lie in [0,1]");
  require(o.init_alpha > 0.0, "init_alpha must be positive");
  return cfg;
}

std::vector<std::vector<int>> sampleLabels(const m3mix_chain& chain) {
  std::vector<std::vector<int>> runs;
  if (chain.hybrid) {
    for (const auto& s : chain.hybridSamples) runs.push_back(m3mix::jointLabels(s.assignments));
  } else {
    for (const auto& s : chain.infinite) runs.push_back(m3mix::jointLabels(s.assignments));
  }
  return runs;
}

double chainDensity(const m3mix_chain& chain, const m3mix::Vector& x) {
  return chain.hybrid ? m3mix::predictiveDensity(std::span<const m3mix::HybridState>(chain.hybridSamples), x)
                      : m3mix::predictiveDensity(std::span<const m3mix::InfiniteM3State>(chain.infinite), x);
}

std::size_t chainDim(const m3mix_chain& chain) {
  if (chain.hybrid) return chain.hybridSamples.empty() ? 0 : chain.hybridSamples.front().prior.dim();
  return chain.infinite.empty() ? 0 : chain.infinite.front().prior.dim();
}

nlohmann::json comparisonJson(const m3mix::experiments::NmiComparison& c) {
  return {{"m3", c.m3}, {"dpmm", c.dpmm}, {"m3Mean", c.m3Mean()}, {"dpmmMean", c.dpmmMean()}, {"seconds", c.seconds}};
}

std::size_t csvColumns(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) throw m3mix::IoError("cannot read " + path.string());
  std::size_t cols = 1;
  for (char c : line) cols += c == ',' ? 1 : 0;
  return cols;
}

}  // namespace

extern "C" {

const char* m3mix_version(void) { return "1.0.0"; }

const char* m3mix_last_error(void) { return lastError.c_str(); }

size_t m3mix_thread_count(void) { return m3mix::experiments::threadCount(); }

const char* m3mix_status_string(m3mix_status status) {
  switch (status) {
    case M3MIX_OK: return "ok";
    case M3MIX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case M3MIX_ERR_NUMERIC: return "numeric error";
    case M3MIX_ERR_PARSE: return "parse error";
    case M3MIX_ERR_IO: return "i/o error";
    case M3MIX_ERR_UNSUPPORTED_VERSION: return "unsupported version";
    case M3MIX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void m3mix_free_ints(int* p) { delete[] p; }
void m3mix_free_string(char* p) { delete[] p; }

// ---- points ----

m3mix_status m3mix_points_read_csv(const char* path, int label_column, m3mix_points** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::optional<std::size_t> col;
    if (label_column >= 0) col = static_cast<std::size_t>(label_column);
    auto* p = new m3mix_points{m3mix::readPointsCsv(std::filesystem::path(path), col)};
    *out = p;
  });
}

m3mix_status m3mix_points_write_csv(const m3mix_points* points, const char* path) {
  return guarded([&] {
    require(points && path, "null argument");
    m3mix::writePointsCsv(points->cloud, path);
  });
}

m3mix_status m3mix_points_from_array(const double* data, size_t n, size_t dim, const int* labels,
                                     m3mix_points** out) {
  return guarded([&] {
    require(data && out, "null argument");
    require(n > 0 && dim > 0, "need at least one point and one dimension");
    m3mix::PointCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < dim; ++j) cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * dim + j];
    if (labels) cloud.labels = std::vector<int>(labels, labels + n);
    for (size_t j = 0; j < dim; ++j) cloud.columnNames.push_back("x" + std::to_string(j));
    *out = new m3mix_points{std::move(cloud)};
  });
}

m3mix_status m3mix_points_gen_factorial(size_t means, size_t covs, size_t per_cell, uint64_t seed,
                                        m3mix_points** out) {
  return guarded([&] {
    require(out, "null argument");
    require(per_cell > 0, "per_cell must be positive");
    auto allMeans = m3mix::defaultFactorialMeans();
    auto allCovs = m3mix::defaultFactorialCovariances();
    if (means < 1 || means > allMeans.size())
      throw std::invalid_argument("means must be between 1 and " + std::to_string(allMeans.size()));
    if (covs < 1 || covs > allCovs.size())
      throw std::invalid_argument("covs must be between 1 and " + std::to_string(allCovs.size()));
    allMeans.resize(means);
    allCovs.resize(covs);
    *out = new m3mix_points{m3mix::genFactorialGaussians(allMeans, allCovs, per_cell, seed)};
  });
}

m3mix_status m3mix_points_gen_unrelated(size_t clusters, size_t per_cluster, uint64_t seed, m3mix_points** out) {
  return guarded([&] {
    require(out, "null argument");
    require(per_cluster > 0, "per_cluster must be positive");
    *out = new m3mix_points{m3mix::genUnrelatedGaussians(clusters, per_cluster, seed)};
  });
}

size_t m3mix_points_count(const m3mix_points* points) { return points ? points->cloud.size() : 0; }
size_t m3mix_points_dim(const m3mix_points* points) { return points ? points->cloud.dim() : 0; }
int m3mix_points_has_labels(const m3mix_points* points) { return points && points->cloud.labels ? 1 : 0; }

m3mix_status m3mix_points_labels(const m3mix_points* points, int* out, size_t n) {
  return guarded([&] {
    require(points && out, "null argument");
    require(points->cloud.labels.has_value(), "point cloud has no labels");
    require(n == points->cloud.size(), "label buffer length differs from the point count");
    std::copy(points->cloud.labels->begin(), points->cloud.labels->end(), out);
  });
}

void m3mix_points_free(m3mix_points* points) { delete points; }

m3mix_status m3mix_labels_read(const char* path, int** out, size_t* n) {
  return guarded([&] {
    require(path && out && n, "null argument");
    const std::vector<int> labels = m3mix::readLabelsCsv(path);
    int* buf = new int[labels.empty() ? 1 : labels.size()];
    std::copy(labels.begin(), labels.end(), buf);
    *out = buf;
    *n = labels.size();
  });
}

m3mix_status m3mix_labels_write(const char* path, const int* labels, size_t n) {
  return guarded([&] {
    require(path && (labels || n == 0), "null argument");
    m3mix::writeLabelsCsv(std::span<const int>(labels, n), path);
  });
}

// ---- corpora ----

m3mix_status m3mix_corpus_read(const char* docword_path, const char* vocab_path, m3mix_corpus** out) {
  return guarded([&] {
    require(docword_path && out, "null argument");
    *out = new m3mix_corpus{m3mix::readBagOfWords(docword_path, vocab_path ? vocab_path : "")};
  });
}

m3mix_status m3mix_corpus_write(const m3mix_corpus* corpus, const char* docword_path, const char* vocab_path) {
  return guarded([&] {
    require(corpus && docword_path, "null argument");
    m3mix::writeBagOfWords(corpus->corpus, docword_path, vocab_path ? vocab_path : "");
  });
}

m3mix_status m3mix_corpus_gen_two_factor(size_t k1, size_t k2, size_t vocab, size_t docs, size_t doc_length,
                                         double omega, double alpha, uint64_t seed, m3mix_corpus** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new m3mix_corpus{
        m3mix::genTwoFactorCorpus(k1, k2, vocab, docs, doc_length, omega, alpha, alpha, seed).corpus};
  });
}

m3mix_status m3mix_corpus_split(const m3mix_corpus* corpus, size_t count, m3mix_corpus** head, m3mix_corpus** tail) {
  return guarded([&] {
    require(corpus && head && tail, "null argument");
    require(count <= corpus->corpus.docs.size(), "split point beyond the last document");
    auto a = std::make_unique<m3mix_corpus>();
    auto b = std::make_unique<m3mix_corpus>();
    for (auto* c : {a.get(), b.get()}) {
      c->corpus.vocab = corpus->corpus.vocab;
      c->corpus.vocabSize = corpus->corpus.vocabSize;
    }
    const auto& docs = corpus->corpus.docs;
    a->corpus.docs.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(count));
    b->corpus.docs.assign(docs.begin() + static_cast<std::ptrdiff_t>(count), docs.end());
    *head = a.release();
    *tail = b.release();
  });
}

size_t m3mix_corpus_docs(const m3mix_corpus* corpus) { return corpus ? corpus->corpus.docs.size() : 0; }
size_t m3mix_corpus_vocab_size(const m3mix_corpus* corpus) { return corpus ? corpus->corpus.vocabSize : 0; }
size_t m3mix_corpus_tokens(const m3mix_corpus* corpus) { return corpus ? corpus->corpus.tokenCount() : 0; }
void m3mix_corpus_free(m3mix_corpus* corpus) { delete corpus; }

// ---- finite ----

void m3mix_finite_options_default(m3mix_finite_options* options) {
  if (!options) return;
  const m3mix::FitConfig d = m3mix::experiments::TopicSettings::defaultFitConfig();
  options->em_iters = d.emIters;
  options->e_iters = d.eIters;
  options->e_tol = d.eTol;
  options->fix_omega = 0;
  options->omega = d.initOmega;
  options->seed = d.seed;
  options->init_alpha = d.initAlpha;
  options->learn_alpha = d.learnAlpha ? 1 : 0;
  options->alpha_warmup = d.alphaWarmup;
  options->omega_warmup = d.omegaWarmup;
  options->restarts = d.restarts;
}

m3mix_status m3mix_finite_fit(const m3mix_corpus* corpus, size_t k1, size_t k2, const m3mix_finite_options* options,
                              m3mix_finite_model** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    const m3mix::FitConfig cfg = fitConfigOf(options);
    m3mix::FitResult r = m3mix::fit(corpus->corpus.docs, corpus->corpus.vocabSize, k1, k2, cfg);
    *out = new m3mix_finite_model{std::move(r.model), std::move(r.elboTrace)};
  });
}

m3mix_status m3mix_finite_fit_lda(const m3mix_corpus* corpus, size_t k, const m3mix_finite_options* options,
                                  m3mix_finite_model** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    const m3mix::FitConfig cfg = fitConfigOf(options);
    m3mix::FitResult r = m3mix::fitLda(corpus->corpus.docs, corpus->corpus.vocabSize, k, cfg);
    *out = new m3mix_finite_model{std::move(r.model), std::move(r.elboTrace)};
  });
}

m3mix_status m3mix_finite_info(const m3mix_finite_model* model, size_t* k1, size_t* k2, size_t* vocab, double* omega,
                               double* alpha1, double* alpha2) {
  return guarded([&] {
    require(model, "null model");
    if (k1) *k1 = model->model.k1();
    if (k2) *k2 = model->model.k2();
    if (vocab) *vocab = model->model.vocabSize();
    if (omega) *omega = model->model.omega;
    if (alpha1) *alpha1 = model->model.alpha1;
    if (alpha2) *alpha2 = model->model.alpha2;
  });
}

size_t m3mix_finite_trace_length(const m3mix_finite_model* model) { return model ? model->trace.size() : 0; }

m3mix_status m3mix_finite_trace(const m3mix_finite_model* model, double* out, size_t n) {
  return guarded([&] {
    require(model && out, "null argument");
    require(n == model->trace.size(), "trace buffer length differs from the trace length");
    std::copy(model->trace.begin(), model->trace.end(), out);
  });
}

m3mix_status m3mix_finite_perplexity(const m3mix_finite_model* model, const m3mix_corpus* docs, double* out) {
  return guarded([&] {
    require(model && docs && out, "null argument");
    require(docs->corpus.vocabSize <= model->model.vocabSize(), "corpus vocabulary is larger than the model's");
    *out = m3mix::experiments::heldOutPerplexity(model->model, docs->corpus.docs);
  });
}

m3mix_status m3mix_finite_predictive(const m3mix_finite_model* model, const m3mix_corpus* corpus, size_t doc,
                                     double* out, size_t vocab) {
  return guarded([&] {
    require(model && corpus && out, "null argument");
    require(doc < corpus->corpus.docs.size(), "document index out of range");
    require(vocab == model->model.vocabSize(), "output length differs from the model vocabulary");
    const auto r = m3mix::inferDocument(model->model, corpus->corpus.docs[doc]);
    const m3mix::Vector p = m3mix::predictiveWordDistribution(model->model, r.state);
    std::copy(p.data(), p.data() + p.size(), out);
  });
}

m3mix_status m3mix_finite_uniform(size_t vocab, m3mix_finite_model** out) {
  return guarded([&] {
    require(out, "null argument");
    require(vocab > 0, "vocabulary must be non-empty");
    m3mix::FiniteM3Model m;
    const auto v = static_cast<Eigen::Index>(vocab);
    m.theta1 = m3mix::Matrix::Constant(1, v, 1.0 / static_cast<double>(vocab));
    m.theta2 = m.theta1;
    m.omega = 1.0;
    *out = new m3mix_finite_model{std::move(m), {}};
  });
}

m3mix_status m3mix_finite_save(const m3mix_finite_model* model, const char* path) {
  return guarded([&] {
    require(model && path, "null argument");
    m3mix::saveFiniteModel(path, model->model);
  });
}

m3mix_status m3mix_finite_load(const char* path, m3mix_finite_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new m3mix_finite_model{m3mix::loadFiniteModel(path), {}};
  });
}

void m3mix_finite_free(m3mix_finite_model* model) { delete model; }

// ---- chains ----

void m3mix_chain_options_default(m3mix_chain_options* options) {
  if (!options) return;
  const m3mix::experiments::GaussianSettings s;
  options->alpha = 1.0;
  options->omega = s.weights.omega();
  options->omega1 = s.weights.omega1();
  options->omega2 = s.weights.omega2();
  options->sweeps = s.sweeps;
  options->burn_in = s.burnIn;
  options->thin = 1;
  options->seed = 1;
  options->aux_count = 3;
  options->init_mode = M3MIX_INIT_DIAGONAL;
  options->init_cells = s.initCells;
  options->prior_scale = s.priorScale;
}

m3mix_status m3mix_chain_fit_infinite(const m3mix_points* points, const m3mix_chain_options* options,
                                      m3mix_chain** out) {
  return guarded([&] {
    require(points && out, "null argument");
    m3mix_chain_options o;
    if (options) {
      o = *options;
    } else {
      m3mix_chain_options_default(&o);
    }
    m3mix::ChainConfig cfg;
    cfg.alpha = o.alpha;
    cfg.weights = weightsOf(o);
    cfg.prior = priorOf(points->cloud.points, o.prior_scale);
    cfg.sweeps = o.sweeps;
    cfg.burnIn = o.burn_in;
    cfg.thin = o.thin;
    cfg.seed = o.seed;
    cfg.auxCount = o.aux_count;
    require(o.init_mode >= M3MIX_INIT_SINGLE && o.init_mode <= M3MIX_INIT_RANDOM, "unknown init mode");
    cfg.init = m3mix::InitOptions{static_cast<m3mix::InitMode>(o.init_mode), o.init_cells};
    auto chain = std::make_unique<m3mix_chain>();
    m3mix::ChainResult r = m3mix::runChain(std::make_shared<const m3mix::Matrix>(points->cloud.points), cfg);
    chain->points = points->cloud.size();
    chain->infinite = std::move(r.samples);
    chain->trace = std::move(r.trace);
    *out = chain.release();
  });
}

m3mix_status m3mix_chain_fit_hybrid(const m3mix_points* points, size_t k2, const m3mix_chain_options* options,
                                    m3mix_chain** out) {
  return guarded([&] {
    require(points && out, "null argument");
    m3mix_chain_options o;
    if (options) {
      o = *options;
    } else {
      m3mix_chain_options_default(&o);
    }
    m3mix::HybridConfig cfg;
    cfg.alpha = o.alpha;
    cfg.prior = priorOf(points->cloud.points, o.prior_scale);
    cfg.sweeps = o.sweeps;
    cfg.burnIn = o.burn_in;
    cfg.thin = o.thin;
    cfg.seed = o.seed;
    cfg.auxCount = o.aux_count;
    auto chain = std::make_unique<m3mix_chain>();
    m3mix::HybridResult r = m3mix::hybridFit(std::make_shared<const m3mix::Matrix>(points->cloud.points), k2, cfg);
    chain->hybrid = true;
    chain->points = points->cloud.size();
    chain->hybridSamples = std::move(r.samples);
    chain->trace.k1 = std::move(r.k1Trace);
    chain->trace.k2.assign(chain->trace.k1.size(), k2);
    chain->trace.logLik = std::move(r.logLikTrace);
    *out = chain.release();
  });
}

int m3mix_chain_is_hybrid(const m3mix_chain* chain) { return chain && chain->hybrid ? 1 : 0; }

size_t m3mix_chain_samples(const m3mix_chain* chain) {
  if (!chain) return 0;
  return chain->hybrid ? chain->hybridSamples.size() : chain->infinite.size();
}

size_t m3mix_chain_points(const m3mix_chain* chain) { return chain ? chain->points : 0; }
size_t m3mix_chain_dim(const m3mix_chain* chain) { return chain ? chainDim(*chain) : 0; }

size_t m3mix_chain_trace_length(const m3mix_chain* chain) { return chain ? chain->trace.logLik.size() : 0; }

m3mix_status m3mix_chain_trace(const m3mix_chain* chain, size_t* k1, size_t* k2, double* loglik, size_t n) {
  return guarded([&] {
    require(chain, "null chain");
    require(n == chain->trace.logLik.size(), "trace buffer length differs from the trace length");
    if (k1) std::copy(chain->trace.k1.begin(), chain->trace.k1.end(), k1);
    if (k2) std::copy(chain->trace.k2.begin(), chain->trace.k2.end(), k2);
    if (loglik) std::copy(chain->trace.logLik.begin(), chain->trace.logLik.end(), loglik);
  });
}

m3mix_status m3mix_chain_labels(const m3mix_chain* chain, size_t sample, int* out, size_t n) {
  return guarded([&] {
    require(chain && out, "null argument");
    require(sample < m3mix_chain_samples(chain), "sample index out of range");
    require(n == chain->points, "label buffer length differs from the point count");
    const std::vector<int> labels =
        chain->hybrid ? m3mix::jointLabels(chain->hybridSamples[sample].assignments)
                      : m3mix::jointLabels(chain->infinite[sample].assignments);
    std::copy(labels.begin(), labels.end(), out);
  });
}

m3mix_status m3mix_chain_nmi(const m3mix_chain* chain, const int* truth, size_t n, size_t stride, double* out) {
  return guarded([&] {
    require(chain && truth && out, "null argument");
    require(n == chain->points, "truth length differs from the point count");
    require(m3mix_chain_samples(chain) > 0, "chain has no retained samples");
    const auto runs = sampleLabels(*chain);
    if (stride == 0) stride = 1;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < runs.size(); i += stride, ++count)
      acc += m3mix::nmi(runs[i], std::span<const int>(truth, n));
    *out = acc / static_cast<double>(count);
  });
}

m3mix_status m3mix_chain_density(const m3mix_chain* chain, const double* x, size_t dim, double* out) {
  return guarded([&] {
    require(chain && x && out, "null argument");
    require(dim == chainDim(*chain), "point dimension differs from the model");
    m3mix::Vector v(static_cast<Eigen::Index>(dim));
    for (size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = x[i];
    *out = chainDensity(*chain, v);
  });
}

m3mix_status m3mix_chain_density_grid(const m3mix_chain* chain, const double* lower, const double* upper,
                                      size_t resolution, const char* csv_path, size_t* peaks) {
  return guarded([&] {
    require(chain && lower && upper && csv_path, "null argument");
    const std::size_t dim = chainDim(*chain);
    require(dim == 1 || dim == 2, "density grids need 1-D or 2-D data");
    m3mix::GridBounds bounds;
    bounds.lower.assign(lower, lower + dim);
    bounds.upper.assign(upper, upper + dim);
    const m3mix::DensityGrid grid =
        m3mix::densityGrid([&](const m3mix::Vector& x) { return chainDensity(*chain, x); }, bounds, resolution);
    m3mix::writeDensityGridCsv(grid, csv_path);
    if (peaks) *peaks = grid.countPeaks();
  });
}

m3mix_status m3mix_chain_confusion(const m3mix_chain* const* chains, size_t count, const int* truth, size_t n,
                                   const char* csv_path) {
  return guarded([&] {
    require(chains && truth && csv_path, "null argument");
    std::vector<std::vector<int>> runs;
    for (size_t c = 0; c < count; ++c) {
      require(chains[c] != nullptr, "null chain");
      require(n == chains[c]->points, "truth length differs from the point count");
      for (auto& r : sampleLabels(*chains[c])) runs.push_back(std::move(r));
    }
    require(!runs.empty(), "no retained samples");
    const m3mix::CoClusterMatrix m = m3mix::coClusterMatrix(runs, std::span<const int>(truth, n));
    m3mix::writeMatrixCsv(m.frequency, csv_path);
  });
}

m3mix_status m3mix_chain_save(const m3mix_chain* chain, const char* path) {
  return guarded([&] {
    require(chain && path, "null argument");
    if (chain->hybrid) {
      m3mix::saveHybridChain(path, chain->hybridSamples);
    } else {
      m3mix::saveInfiniteChain(path, chain->infinite);
    }
  });
}

m3mix_status m3mix_chain_load(const char* path, m3mix_chain** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto chain = std::make_unique<m3mix_chain>();
    const std::string type = m3mix::modelFileType(path);
    if (type == "hybrid-m3-chain") {
      chain->hybrid = true;
      chain->hybridSamples = m3mix::loadHybridChain(path);
      if (!chain->hybridSamples.empty()) chain->points = chain->hybridSamples.front().assignments.size();
    } else if (type == "infinite-m3-chain") {
      chain->infinite = m3mix::loadInfiniteChain(path);
      if (!chain->infinite.empty()) chain->points = chain->infinite.front().assignments.size();
    } else {
      throw m3mix::ParseError("not a chain file (type " + type + ")");
    }
    *out = chain.release();
  });
}

void m3mix_chain_free(m3mix_chain* chain) { delete chain; }

m3mix_status m3mix_model_file_type(const char* path, char** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = copyString(m3mix::modelFileType(path));
  });
}

// ---- metrics ----

m3mix_status m3mix_nmi(const int* a, const int* b, size_t n, double* out) {
  return guarded([&] {
    require(a && b && out, "null argument");
    *out = m3mix::nmi(std::span<const int>(a, n), std::span<const int>(b, n));
  });
}

m3mix_status m3mix_perplexity(const double* loglik, const size_t* lengths, size_t n, double* out) {
  return guarded([&] {
    require(loglik && lengths && out, "null argument");
    *out = m3mix::perplexity(std::span<const double>(loglik, n), std::span<const std::size_t>(lengths, n));
  });
}

// ---- repro ----

m3mix_status m3mix_repro(const char* experiment, const char* data_path, size_t seeds, char** report) {
  return guarded([&] {
    require(experiment && report, "null argument");
    const std::string name = experiment;
    nlohmann::json j;
    j["experiment"] = name;
    if (name == "gaussian") {
      m3mix::experiments::GaussianSettings s;
      if (seeds) s.seeds = seeds;
      j["seeds"] = s.seeds;
      j["sharing"] = comparisonJson(m3mix::experiments::gaussianSharing(s));
      j["unrelated"] = comparisonJson(m3mix::experiments::gaussianUnrelated(s));
    } else if (name == "iris") {
      const std::filesystem::path path = data_path && *data_path ? data_path : "data/iris.csv";
      if (!std::filesystem::exists(path))
        throw m3mix::IoError("Iris data not found at '" + path.string() +
                             "'. Expected a CSV with four numeric columns and a species label column "
                             "(header sepal_length,sepal_width,petal_length,petal_width,species); the repository "
                             "ships one as data/iris.csv. Pass its location with --data.");
      const std::size_t cols = csvColumns(path);
      require(cols >= 2, "Iris CSV needs feature columns and a label column");
      const m3mix::PointCloud cloud = m3mix::readPointsCsv(path, cols - 1);
      m3mix::experiments::GaussianSettings s;
      if (seeds) s.seeds = seeds;
      j["seeds"] = s.seeds;
      j["data"] = path.string();
      j["iris"] = comparisonJson(m3mix::experiments::labelledData(cloud, s));
    } else if (name == "topics") {
      m3mix::experiments::TopicSettings s;
      if (seeds) s.seeds = seeds;
      const auto c = m3mix::experiments::topics(s);
      j["seeds"] = s.seeds;
      j["topics"] = {{"m3", c.m3},       {"lda", c.lda},         {"omega", c.omega},
                     {"m3Wins", c.m3Wins()}, {"seconds", c.seconds}, {"ldaTopics", s.ldaTopics}};
    } else {
      throw std::invalid_argument("unknown experiment '" + name + "' (expected gaussian, iris or topics)");
    }
    *report = copyString(j.dump(2));
  });
}

}  // extern "C"
