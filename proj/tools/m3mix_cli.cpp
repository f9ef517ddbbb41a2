// m3mix command-line frontend. Talks to the library only through m3mix.h.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "m3mix/m3mix.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(m3mix_status s) {
  if (s != M3MIX_OK) throw CliError(std::string(m3mix_status_string(s)) + ": " + m3mix_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Points = std::unique_ptr<m3mix_points, Deleter<m3mix_points, m3mix_points_free>>;
using Corpus = std::unique_ptr<m3mix_corpus, Deleter<m3mix_corpus, m3mix_corpus_free>>;
using Finite = std::unique_ptr<m3mix_finite_model, Deleter<m3mix_finite_model, m3mix_finite_free>>;
using Chain = std::unique_ptr<m3mix_chain, Deleter<m3mix_chain, m3mix_chain_free>>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { m3mix_free_string(p); }
};

// Records every option of a subcommand so reruns can be reproduced from the manifest.
json parametersOf(const CLI::App* app) {
  json params = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      if (opt->get_expected_max() > 1 || r.size() > 1) {
        params[name] = r;
      } else if (opt->get_type_size() == 0) {
        params[name] = true;
      } else {
        params[name] = r.empty() ? "" : r.front();
      }
    } else if (!opt->get_default_str().empty()) {
      params[name] = opt->get_default_str();
    }
  }
  return params;
}

void writeManifest(const fs::path& dir, const CLI::App* app, const std::vector<std::string>& outputs,
                   const json& extra = json::object()) {
  json m;
  m["tool"] = "m3mix";
  m["version"] = m3mix_version();
  m["command"] = app->get_name();
  m["parameters"] = parametersOf(app);
  m["outputs"] = outputs;
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  std::ofstream out(dir / "manifest.json");
  if (!out) throw CliError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << "\n";
}

void ensureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::vector<int> pointLabels(const m3mix_points* p) {
  if (!m3mix_points_has_labels(p)) throw CliError("the data file has no label column (pass --label-column)");
  std::vector<int> labels(m3mix_points_count(p));
  check(m3mix_points_labels(p, labels.data(), labels.size()));
  return labels;
}

std::vector<int> readLabels(const std::string& path) {
  int* buf = nullptr;
  size_t n = 0;
  check(m3mix_labels_read(path.c_str(), &buf, &n));
  std::vector<int> out(buf, buf + n);
  m3mix_free_ints(buf);
  return out;
}

Points loadPoints(const std::string& path, int labelColumn) {
  m3mix_points* p = nullptr;
  check(m3mix_points_read_csv(path.c_str(), labelColumn, &p));
  return Points(p);
}

Chain loadChain(const std::string& path) {
  m3mix_chain* c = nullptr;
  check(m3mix_chain_load(path.c_str(), &c));
  return Chain(c);
}

Corpus loadCorpus(const std::string& docword, const std::string& vocab) {
  m3mix_corpus* c = nullptr;
  check(m3mix_corpus_read(docword.c_str(), vocab.empty() ? nullptr : vocab.c_str(), &c));
  return Corpus(c);
}

void writeChainArtifacts(const m3mix_chain* chain, const fs::path& dir, const std::string& suffix,
                         std::vector<std::string>& outputs) {
  const std::string model = "chain" + suffix + ".json";
  check(m3mix_chain_save(chain, (dir / model).string().c_str()));
  const size_t n = m3mix_chain_trace_length(chain);
  std::vector<size_t> k1(n), k2(n);
  std::vector<double> ll(n);
  check(m3mix_chain_trace(chain, k1.data(), k2.data(), ll.data(), n));
  const std::string trace = "trace" + suffix + ".csv";
  std::ofstream t(dir / trace);
  t << "sweep,k1,k2,loglik\n";
  for (size_t i = 0; i < n; ++i) t << i + 1 << "," << k1[i] << "," << k2[i] << "," << fmt(ll[i]) << "\n";
  if (!t) throw CliError("cannot write " + (dir / trace).string());
  outputs.push_back(model);
  outputs.push_back(trace);
  const size_t samples = m3mix_chain_samples(chain);
  if (samples > 0) {
    std::vector<int> labels(m3mix_chain_points(chain));
    check(m3mix_chain_labels(chain, samples - 1, labels.data(), labels.size()));
    const std::string lab = "labels" + suffix + ".csv";
    check(m3mix_labels_write((dir / lab).string().c_str(), labels.data(), labels.size()));
    outputs.push_back(lab);
  }
}

// Chain options shared by fit-infinite, fit-dpmm and fit-hybrid.
struct ChainFlags {
  std::string data;
  int labelColumn = -1;
  std::string out;
  std::string init = "diagonal";
  bool diagInit = false;
  size_t chains = 1;
  m3mix_chain_options o{};
};

void addChainFlags(CLI::App* cmd, ChainFlags& f, bool withOmega, bool withInit) {
  m3mix_chain_options_default(&f.o);
  cmd->add_option("--data", f.data, "point CSV")->required();
  cmd->add_option("--label-column", f.labelColumn, "0-based label column to exclude from the features")
      ->capture_default_str();
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--alpha", f.o.alpha, "DP concentration")->capture_default_str();
  if (withOmega) {
    cmd->add_option("--omega", f.o.omega, "sharing weight omega")->capture_default_str();
    cmd->add_option("--omega1", f.o.omega1, "new-mean weight omega1")->capture_default_str();
    cmd->add_option("--omega2", f.o.omega2, "new-covariance weight omega2")->capture_default_str();
  }
  cmd->add_option("--sweeps", f.o.sweeps, "Gibbs sweeps")->capture_default_str();
  cmd->add_option("--burn-in", f.o.burn_in, "sweeps discarded before retaining samples")->capture_default_str();
  cmd->add_option("--thin", f.o.thin, "keep every k-th sweep after burn-in")->capture_default_str();
  cmd->add_option("--aux", f.o.aux_count, "auxiliary components per dimension")->capture_default_str();
  cmd->add_option("--prior-scale", f.o.prior_scale, "Lambda0 as a multiple of the data covariance")
      ->capture_default_str();
  if (withInit) {
    cmd->add_option("--init", f.init, "initial table: single, diagonal or random")
        ->check(CLI::IsMember({"single", "diagonal", "random"}))
        ->capture_default_str();
    cmd->add_flag("--diag-init", f.diagInit, "shorthand for --init diagonal");
    cmd->add_option("--init-cells", f.o.init_cells, "cells used by diagonal/random init")->capture_default_str();
  }
  cmd->add_option("--seed", f.o.seed, "random seed (chain k uses seed + k)")->capture_default_str();
  cmd->add_option("--chains", f.chains, "independent chains, run in parallel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

template <typename Fit>
void runChains(const CLI::App* cmd, ChainFlags& f, Fit fitOne) {
  if (f.diagInit) f.init = "diagonal";
  f.o.init_mode = f.init == "single" ? M3MIX_INIT_SINGLE : f.init == "random" ? M3MIX_INIT_RANDOM : M3MIX_INIT_DIAGONAL;
  Points points = loadPoints(f.data, f.labelColumn);
  const fs::path dir(f.out);
  ensureDir(dir);

  std::vector<Chain> chains(f.chains);
  std::vector<std::string> errors(f.chains);
  const size_t workers = std::max<size_t>(1, std::min(f.chains, m3mix_thread_count()));
  auto work = [&](size_t w) {
    for (size_t k = w; k < f.chains; k += workers) {
      m3mix_chain_options o = f.o;
      o.seed = f.o.seed + k;
      m3mix_chain* c = nullptr;
      if (fitOne(points.get(), &o, &c) != M3MIX_OK) {
        errors[k] = m3mix_last_error();
      } else {
        chains[k].reset(c);
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (!e.empty()) throw CliError(e);

  std::vector<std::string> outputs;
  json summary = json::array();
  for (size_t k = 0; k < f.chains; ++k) {
    writeChainArtifacts(chains[k].get(), dir, f.chains == 1 ? "" : "_" + std::to_string(k), outputs);
    json s{{"chain", k}, {"seed", f.o.seed + k}, {"samples", m3mix_chain_samples(chains[k].get())}};
    if (m3mix_points_has_labels(points.get())) {
      const std::vector<int> truth = pointLabels(points.get());
      double v = 0.0;
      check(m3mix_chain_nmi(chains[k].get(), truth.data(), truth.size(), 1, &v));
      s["nmi"] = v;
      std::cout << "chain " << k << ": NMI " << v << "\n";
    }
    summary.push_back(s);
  }
  writeManifest(dir, cmd, outputs, {{"chains", summary}});
  std::cout << "wrote " << outputs.size() << " files to " << dir.string() << "\n";
}

struct FiniteFlags {
  std::string docword;
  std::string vocab;
  std::string out;
  size_t k1 = 10;
  size_t k2 = 2;
  std::optional<double> omega;
  m3mix_finite_options o{};
};

void addFiniteFlags(CLI::App* cmd, FiniteFlags& f, bool lda) {
  m3mix_finite_options_default(&f.o);
  cmd->add_option("--docword", f.docword, "UCI docword file")->required();
  cmd->add_option("--vocab", f.vocab, "UCI vocab file (optional)");
  cmd->add_option("--out", f.out, "output directory")->required();
  if (lda) {
    cmd->add_option("--k1,--k", f.k1, "number of topics")->capture_default_str();
  } else {
    cmd->add_option("--k1", f.k1, "topics in dimension 1")->capture_default_str();
    cmd->add_option("--k2", f.k2, "topics in dimension 2")->capture_default_str();
    cmd->add_option("--omega", f.omega, "fix omega at this value (learned when absent)");
    cmd->add_option("--omega-init", f.o.omega, "starting omega when learned")->capture_default_str();
    cmd->add_option("--omega-warmup", f.o.omega_warmup, "EM iterations with omega held")->capture_default_str();
  }
  cmd->add_option("--em-iters", f.o.em_iters, "EM iterations")->capture_default_str();
  cmd->add_option("--e-iters", f.o.e_iters, "E-step iterations per document")->capture_default_str();
  cmd->add_option("--e-tol", f.o.e_tol, "relative E-step tolerance")->capture_default_str();
  cmd->add_option("--alpha", f.o.init_alpha, "initial Dirichlet concentration")->capture_default_str();
  cmd->add_option("--alpha-warmup", f.o.alpha_warmup, "EM iterations before alpha is learned")
      ->capture_default_str();
  cmd->add_option("--restarts", f.o.restarts, "random starts, best training bound kept")->capture_default_str();
  cmd->add_option("--seed", f.o.seed, "random seed")->capture_default_str();
}

void runFinite(const CLI::App* cmd, FiniteFlags f, bool lda) {
  // fit-lda is fit-finite with omega fixed at 1 and K2 = 1.
  if (lda) {
    f.k2 = 1;
    f.omega = 1.0;
  }
  if (f.omega) {
    f.o.fix_omega = 1;
    f.o.omega = *f.omega;
  }
  Corpus corpus = loadCorpus(f.docword, f.vocab);
  const fs::path dir(f.out);
  ensureDir(dir);
  m3mix_finite_model* raw = nullptr;
  check(m3mix_finite_fit(corpus.get(), f.k1, f.k2, &f.o, &raw));
  Finite model(raw);
  check(m3mix_finite_save(model.get(), (dir / "model.json").string().c_str()));
  const size_t n = m3mix_finite_trace_length(model.get());
  std::vector<double> trace(n);
  check(m3mix_finite_trace(model.get(), trace.data(), n));
  std::ofstream t(dir / "trace.csv");
  t << "em_iter,elbo\n";
  for (size_t i = 0; i < n; ++i) t << i + 1 << "," << fmt(trace[i]) << "\n";
  if (!t) throw CliError("cannot write trace.csv");
  double omega = 0, a1 = 0, a2 = 0;
  check(m3mix_finite_info(model.get(), nullptr, nullptr, nullptr, &omega, &a1, &a2));
  writeManifest(dir, cmd, {"model.json", "trace.csv"},
                {{"fitted", {{"omega", omega}, {"alpha1", a1}, {"alpha2", a2}, {"finalElbo", n ? trace.back() : 0.0}}}});
  std::cout << "omega " << omega << ", alpha1 " << a1 << ", alpha2 " << a2 << "\n";
}

std::vector<double> parseList(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CliError("not a number list: '" + s + "'");
    }
  }
  return out;
}

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Check> reproChecks(const json& r) {
  std::vector<Check> checks;
  const std::string e = r["experiment"];
  auto num = [](double v) { return fmt(std::round(v * 1e4) / 1e4); };
  if (e == "gaussian") {
    const double m = r["sharing"]["m3Mean"], d = r["sharing"]["dpmmMean"];
    checks.push_back({"sharing: M3 NMI >= DPMM NMI", m >= d, num(m) + " vs " + num(d)});
    checks.push_back({"sharing: M3 NMI >= 0.65", m >= 0.65, num(m)});
    const double um = r["unrelated"]["m3Mean"], ud = r["unrelated"]["dpmmMean"];
    checks.push_back({"unrelated: |M3 - DPMM| <= 0.05", std::abs(um - ud) <= 0.05, num(um) + " vs " + num(ud)});
  } else if (e == "iris") {
    const double m = r["iris"]["m3Mean"], d = r["iris"]["dpmmMean"];
    checks.push_back({"iris: M3 NMI in [0.62, 0.82]", m >= 0.62 && m <= 0.82, num(m)});
    checks.push_back({"iris: M3 NMI >= DPMM NMI - 0.02", m >= d - 0.02, num(m) + " vs " + num(d)});
  } else if (e == "topics") {
    const size_t wins = r["topics"]["m3Wins"];
    const size_t seeds = r["seeds"];
    const size_t need = (4 * seeds + 4) / 5;
    checks.push_back({"topics: M3 beats LDA on >= 4/5 of seeds", wins >= need,
                      std::to_string(wins) + "/" + std::to_string(seeds)});
  }
  return checks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"m3mix: multi-dimensional membership mixture models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(m3mix_version()));

  // gen-gaussian
  auto* genG = app.add_subcommand("gen-gaussian", "generate factorial or unrelated Gaussian data");
  size_t gMeans = 5, gCovs = 2, gPer = 100, gUnrelated = 0;
  uint64_t gSeed = 1;
  std::string gOut;
  genG->add_option("--means", gMeans, "distinct means (1-5)")->capture_default_str();
  genG->add_option("--covs", gCovs, "distinct covariances (1-2)")->capture_default_str();
  genG->add_option("--per-cell", gPer, "points per (mean, covariance) pair or per cluster")->capture_default_str();
  genG->add_option("--unrelated", gUnrelated, "generate this many unrelated Gaussians instead");
  genG->add_option("--seed", gSeed, "random seed")->required();
  genG->add_option("--out", gOut, "output directory")->required();

  // gen-corpus
  auto* genC = app.add_subcommand("gen-corpus", "generate a two-factor bag-of-words corpus");
  size_t cK1 = 10, cK2 = 2, cV = 500, cDocs = 200, cLen = 100;
  double cOmega = 0.5, cAlpha = 0.1;
  uint64_t cSeed = 1;
  std::string cOut;
  genC->add_option("--k1", cK1, "dimension-1 topics")->capture_default_str();
  genC->add_option("--k2", cK2, "dimension-2 topics")->capture_default_str();
  genC->add_option("--v", cV, "vocabulary size")->capture_default_str();
  genC->add_option("--docs", cDocs, "documents")->capture_default_str();
  genC->add_option("--len", cLen, "tokens per document")->capture_default_str();
  genC->add_option("--omega", cOmega, "sharing weight of the generator")->capture_default_str();
  genC->add_option("--alpha", cAlpha, "document Dirichlet concentration")->capture_default_str();
  genC->add_option("--seed", cSeed, "random seed")->required();
  genC->add_option("--out", cOut, "output directory")->required();

  ChainFlags inf, dpmm, hyb;
  auto* fitInf = app.add_subcommand("fit-infinite", "Gibbs-sample the infinite M3 model on point data");
  addChainFlags(fitInf, inf, true, true);
  auto* fitDpmm = app.add_subcommand("fit-dpmm", "DPMM baseline (fit-infinite with --omega 1 --diag-init)");
  addChainFlags(fitDpmm, dpmm, false, false);
  auto* fitHyb = app.add_subcommand("fit-hybrid", "hybrid M3: infinite means, finite covariances");
  addChainFlags(fitHyb, hyb, false, false);
  size_t hK2 = 2;
  fitHyb->add_option("--k2", hK2, "finite covariance components")->capture_default_str();

  FiniteFlags fin, lda;
  auto* fitFin = app.add_subcommand("fit-finite", "variational EM for the finite M3 topic model");
  addFiniteFlags(fitFin, fin, false);
  auto* fitLda = app.add_subcommand("fit-lda", "LDA baseline (fit-finite with --omega 1 --k2 1)");
  addFiniteFlags(fitLda, lda, true);

  // eval-*
  auto* evPerp = app.add_subcommand("eval-perplexity", "held-out perplexity of a finite model");
  std::string pModel, pDocword, pVocab, pOut;
  size_t pUniform = 0;
  auto* pModelOpt = evPerp->add_option("--model", pModel, "finite model JSON");
  evPerp->add_option("--uniform", pUniform, "score a uniform model over this many words instead")
      ->excludes(pModelOpt);
  evPerp->add_option("--docword", pDocword, "UCI docword file")->required();
  evPerp->add_option("--vocab", pVocab, "UCI vocab file");
  evPerp->add_option("--out", pOut, "directory for metrics.json");

  auto* evNmi = app.add_subcommand("eval-nmi", "normalized mutual information");
  std::string nA, nB, nModel, nData, nOut;
  int nLabelCol = -1;
  size_t nStride = 1;
  evNmi->add_option("--a", nA, "first label file");
  evNmi->add_option("--b", nB, "second label file");
  evNmi->add_option("--model", nModel, "chain JSON (averages over retained samples)");
  evNmi->add_option("--data", nData, "point CSV with ground-truth labels");
  evNmi->add_option("--label-column", nLabelCol, "0-based label column of --data");
  evNmi->add_option("--stride", nStride, "use every k-th retained sample")->capture_default_str();
  evNmi->add_option("--out", nOut, "directory for metrics.json");

  auto* evDens = app.add_subcommand("eval-density", "predictive density of a chain on a grid");
  std::string dModel, dLower, dUpper, dOut;
  size_t dRes = 100;
  evDens->add_option("--model", dModel, "chain JSON")->required();
  evDens->add_option("--lower", dLower, "lower grid corner, comma separated")->required();
  evDens->add_option("--upper", dUpper, "upper grid corner, comma separated")->required();
  evDens->add_option("--resolution", dRes, "grid points per axis")->capture_default_str();
  evDens->add_option("--out", dOut, "output directory")->required();

  auto* evConf = app.add_subcommand("eval-confusion", "co-clustering frequency matrix over runs");
  std::vector<std::string> fModels;
  std::string fData, fOut;
  int fLabelCol = -1;
  evConf->add_option("--model", fModels, "chain JSON (repeatable)")->required();
  evConf->add_option("--data", fData, "point CSV with ground-truth labels")->required();
  evConf->add_option("--label-column", fLabelCol, "0-based label column of --data")->required();
  evConf->add_option("--out", fOut, "output directory")->required();

  auto* repro = app.add_subcommand("repro", "rerun a reference experiment with pinned seeds");
  std::string rExp, rData = "data/iris.csv", rOut;
  size_t rSeeds = 5;
  repro->add_option("--experiment", rExp, "gaussian, iris or topics")
      ->required()
      ->check(CLI::IsMember({"gaussian", "iris", "topics"}));
  repro->add_option("--data", rData, "Iris CSV (iris only)")->capture_default_str();
  repro->add_option("--seeds", rSeeds, "number of seeds")->check(CLI::PositiveNumber)->capture_default_str();
  repro->add_option("--out", rOut, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*genG) {
      const fs::path dir(gOut);
      ensureDir(dir);
      m3mix_points* raw = nullptr;
      if (gUnrelated > 0) {
        check(m3mix_points_gen_unrelated(gUnrelated, gPer, gSeed, &raw));
      } else {
        check(m3mix_points_gen_factorial(gMeans, gCovs, gPer, gSeed, &raw));
      }
      Points p(raw);
      check(m3mix_points_write_csv(p.get(), (dir / "points.csv").string().c_str()));
      writeManifest(dir, genG, {"points.csv"}, {{"rows", m3mix_points_count(p.get())}, {"labelColumn", m3mix_points_dim(p.get())}});
      std::cout << "wrote " << m3mix_points_count(p.get()) << " points to " << (dir / "points.csv").string() << "\n";
    } else if (*genC) {
      const fs::path dir(cOut);
      ensureDir(dir);
      m3mix_corpus* raw = nullptr;
      check(m3mix_corpus_gen_two_factor(cK1, cK2, cV, cDocs, cLen, cOmega, cAlpha, cSeed, &raw));
      Corpus c(raw);
      check(m3mix_corpus_write(c.get(), (dir / "docword.txt").string().c_str(), (dir / "vocab.txt").string().c_str()));
      writeManifest(dir, genC, {"docword.txt", "vocab.txt"});
      std::cout << "wrote " << m3mix_corpus_docs(c.get()) << " documents to " << dir.string() << "\n";
    } else if (*fitInf) {
      runChains(fitInf, inf, m3mix_chain_fit_infinite);
    } else if (*fitDpmm) {
      // fit-dpmm is fit-infinite with omega = 1 and diagonal initialization.
      dpmm.o.omega = 1.0;
      dpmm.o.omega1 = 0.0;
      dpmm.o.omega2 = 0.0;
      dpmm.diagInit = true;
      runChains(fitDpmm, dpmm, m3mix_chain_fit_infinite);
    } else if (*fitHyb) {
      runChains(fitHyb, hyb, [hK2](const m3mix_points* p, const m3mix_chain_options* o, m3mix_chain** out) {
        return m3mix_chain_fit_hybrid(p, hK2, o, out);
      });
    } else if (*fitFin) {
      runFinite(fitFin, fin, false);
    } else if (*fitLda) {
      runFinite(fitLda, lda, true);
    } else if (*evPerp) {
      if (pModel.empty() && pUniform == 0) throw CliError("eval-perplexity needs --model or --uniform");
      Corpus c = loadCorpus(pDocword, pVocab);
      m3mix_finite_model* raw = nullptr;
      check(pUniform > 0 ? m3mix_finite_uniform(pUniform, &raw) : m3mix_finite_load(pModel.c_str(), &raw));
      Finite model(raw);
      size_t v = 0;
      check(m3mix_finite_info(model.get(), nullptr, nullptr, &v, nullptr, nullptr, nullptr));
      if (m3mix_corpus_vocab_size(c.get()) != v)
        throw CliError("model vocabulary (" + std::to_string(v) + ") differs from the corpus vocabulary (" +
                       std::to_string(m3mix_corpus_vocab_size(c.get())) + ")");
      double perp = 0.0;
      check(m3mix_finite_perplexity(model.get(), c.get(), &perp));
      std::cout << "perplexity " << fmt(perp) << "\n";
      if (!pOut.empty()) {
        ensureDir(pOut);
        std::ofstream(fs::path(pOut) / "metrics.json") << json{{"perplexity", perp}}.dump(2) << "\n";
        writeManifest(pOut, evPerp, {"metrics.json"});
      }
    } else if (*evNmi) {
      double v = 0.0;
      if (!nA.empty() || !nB.empty()) {
        if (nA.empty() || nB.empty()) throw CliError("eval-nmi needs both --a and --b");
        const auto a = readLabels(nA), b = readLabels(nB);
        if (a.size() != b.size())
          throw CliError("label files differ in length (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
        check(m3mix_nmi(a.data(), b.data(), a.size(), &v));
      } else {
        if (nModel.empty() || nData.empty() || nLabelCol < 0)
          throw CliError("eval-nmi needs --a/--b or --model, --data and --label-column");
        Chain chain = loadChain(nModel);
        Points pts = loadPoints(nData, nLabelCol);
        const auto truth = pointLabels(pts.get());
        if (m3mix_chain_points(chain.get()) != truth.size())
          throw CliError("model has " + std::to_string(m3mix_chain_points(chain.get())) + " points but the data has " +
                         std::to_string(truth.size()));
        check(m3mix_chain_nmi(chain.get(), truth.data(), truth.size(), nStride, &v));
      }
      std::cout << "nmi " << fmt(v) << "\n";
      if (!nOut.empty()) {
        ensureDir(nOut);
        std::ofstream(fs::path(nOut) / "metrics.json") << json{{"nmi", v}}.dump(2) << "\n";
        writeManifest(nOut, evNmi, {"metrics.json"});
      }
    } else if (*evDens) {
      Chain chain = loadChain(dModel);
      const auto lo = parseList(dLower), hi = parseList(dUpper);
      const size_t dim = m3mix_chain_dim(chain.get());
      if (lo.size() != dim || hi.size() != dim)
        throw CliError("grid bounds have " + std::to_string(lo.size()) + "/" + std::to_string(hi.size()) +
                       " coordinates but the model is " + std::to_string(dim) + "-dimensional");
      ensureDir(dOut);
      size_t peaks = 0;
      check(m3mix_chain_density_grid(chain.get(), lo.data(), hi.data(), dRes,
                                     (fs::path(dOut) / "density.csv").string().c_str(), &peaks));
      writeManifest(dOut, evDens, {"density.csv"}, {{"peaks", peaks}});
      std::cout << "peaks " << peaks << "\n";
    } else if (*evConf) {
      Points pts = loadPoints(fData, fLabelCol);
      const auto truth = pointLabels(pts.get());
      std::vector<Chain> chains;
      std::vector<const m3mix_chain*> ptrs;
      for (const auto& m : fModels) {
        chains.push_back(loadChain(m));
        ptrs.push_back(chains.back().get());
      }
      ensureDir(fOut);
      check(m3mix_chain_confusion(ptrs.data(), ptrs.size(), truth.data(), truth.size(),
                                  (fs::path(fOut) / "confusion.csv").string().c_str()));
      writeManifest(fOut, evConf, {"confusion.csv"});
      std::cout << "wrote " << truth.size() << "x" << truth.size() << " matrix\n";
    } else if (*repro) {
      OwnedString report;
      check(m3mix_repro(rExp.c_str(), rData.c_str(), rSeeds, &report.p));
      json r = json::parse(report.p);
      const auto checks = reproChecks(r);
      bool all = true;
      json jc = json::array();
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        jc.push_back({{"check", c.name}, {"pass", c.pass}, {"value", c.detail}});
        all = all && c.pass;
      }
      r["checks"] = jc;
      r["allPass"] = all;
      ensureDir(rOut);
      std::ofstream(fs::path(rOut) / "report.json") << r.dump(2) << "\n";
      writeManifest(rOut, repro, {"report.json"});
      return all ? 0 : 3;
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
