#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "m3mix/gaussian.hpp"
#include "m3mix/optim.hpp"

namespace m3mix {

struct Document {
  std::vector<std::uint32_t> tokens;  // vocabulary indices, one entry per occurrence
};

// Two topic spaces; a word is drawn from the blend
//   (1 + omega)/2 * theta1[z1] + (1 - omega)/2 * theta2[z2].
struct FiniteM3Model {
  Matrix theta1;  // K1 x V, row-stochastic
  Matrix theta2;  // K2 x V, row-stochastic
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double omega = 0.5;

  std::size_t k1() const noexcept { return static_cast<std::size_t>(theta1.rows()); }
  std::size_t k2() const noexcept { return static_cast<std::size_t>(theta2.rows()); }
  std::size_t vocabSize() const noexcept { return static_cast<std::size_t>(theta1.cols()); }

  // Throws std::invalid_argument on shape mismatch, non-positive alphas, omega
  // outside [0,1], negative entries or rows not summing to 1 within 1e-8.
  void validate() const;
};

double wordProb(const FiniteM3Model& model, std::size_t z1, std::size_t z2, std::size_t v);

struct VariationalState {
  Vector gamma1;  // K1
  Vector gamma2;  // K2
  Matrix phi1;    // N x K1
  Matrix phi2;    // N x K2
};

// Uniform phi and gamma = alpha + N / K.
VariationalState uniformState(const FiniteM3Model& model, const Document& doc);

// Evidence lower bound of one document. `clamped` (optional) is set when some
// word probability with non-zero phi mass was clamped at 1e-300 before the log.
double elbo(const FiniteM3Model& model, const Document& doc, const VariationalState& vs,
            bool* clamped = nullptr);

struct EStepResult {
  VariationalState state;
  double elbo = 0.0;
  std::vector<double> history;  // ELBO at the start state and after every iteration
  std::size_t iters = 0;
  bool clamped = false;
};

// Mean-field coordinate ascent (phi1, phi2, gamma1, gamma2 per iteration) until the
// relative ELBO change drops below tol or maxIters is reached.
EStepResult eStep(const FiniteM3Model& model, const Document& doc, std::size_t maxIters, double tol);
EStepResult eStep(const FiniteM3Model& model, const Document& doc, VariationalState start,
                  std::size_t maxIters, double tol);

// Per-document inference with the model frozen; starts from uniformState.
EStepResult inferDocument(const FiniteM3Model& model, const Document& doc,
                          std::size_t maxIters = 200, double tol = 1e-9);

// Expected word distribution of a document under its variational posterior.
Vector predictiveWordDistribution(const FiniteM3Model& model, const VariationalState& vs);

// Symmetric-Dirichlet terms of the bound summed over documents.
double alphaObjective(std::span<const Vector> gammas, double alpha);

struct AlphaUpdate {
  double alpha = 1.0;
  bool warning = false;  // Newton could not make progress inside the positive domain
};

// Newton-Raphson ascent on alphaObjective for a single symmetric Dirichlet.
AlphaUpdate updateAlpha(std::span<const Vector> gammas, std::size_t k, double currentAlpha);

// Expected co-occurrence statistics sum_{d,n: x_dn = v} phi1_dn phi2_dn^T per word.
struct TopicStatistics {
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::vector<Matrix> perWord;  // V matrices of K1 x K2, empty for unseen words
  double tokens = 0.0;

  TopicStatistics(std::size_t k1, std::size_t k2, std::size_t vocabSize);
  void accumulate(const Document& doc, const VariationalState& vs);
};

// The theta/omega terms of the bound: sum_v sum_ij S_v[ij] log wordProb(i, j, v).
double thetaOmegaObjective(const TopicStatistics& stats, const Matrix& theta1, const Matrix& theta2,
                           double omega);

// Penalized M-step objective in unconstrained coordinates. Packing of x:
// log theta1 (row-major), log theta2 (row-major), then logit(omega) unless omega
// is fixed. The bound term is divided by stats.tokens; penalties are
// 0.5 * sum_i lambda_i (row sum_i - 1)^2 over theta1 rows then theta2 rows.
class PenalizedThetaObjective {
 public:
  PenalizedThetaObjective(const TopicStatistics& stats, std::optional<double> fixedOmega);

  std::size_t size() const noexcept;
  Vector pack(const Matrix& theta1, const Matrix& theta2, double omega) const;
  void unpack(const Vector& x, Matrix& theta1, Matrix& theta2, double& omega) const;
  double evaluate(const Vector& x, const Vector& penalties, Vector& grad) const;
  Vector rowResiduals(const Vector& x) const;

 private:
  const TopicStatistics& stats_;
  std::optional<double> fixedOmega_;
  std::size_t v_;
};

struct ThetaOmegaConfig {
  optim::PenaltySchedule schedule{1.0, 10.0, 8, 1e-4, 1e8};
  optim::LbfgsConfig lbfgs{10, 100, 1e-6, 1e-15, 1e-4, 0.9, 1.0, 40};
};

struct ThetaOmegaUpdate {
  Matrix theta1;
  Matrix theta2;
  double omega = 0.5;
  double objectiveBefore = 0.0;  // -thetaOmegaObjective at the input
  double objectiveAfter = 0.0;   // -thetaOmegaObjective at the output
  bool feasible = true;          // penalty loop met its row-sum tolerance
  bool lineSearchFailed = false;
  bool keptInput = false;        // the optimized point was worse, input returned
};

ThetaOmegaUpdate updateThetaOmega(const TopicStatistics& stats, const Matrix& theta1,
                                  const Matrix& theta2, double omega, std::optional<double> fixedOmega,
                                  const ThetaOmegaConfig& config = {});

struct FitConfig {
  std::size_t emIters = 50;
  std::size_t eIters = 50;
  double eTol = 1e-7;
  double emTol = 0.0;  // relative corpus-ELBO change to stop early; 0 runs all iterations
  std::optional<double> fixOmega;
  std::uint64_t seed = 1;
  double initAlpha = 1.0;
  double initOmega = 0.5;
  bool learnAlpha = true;
  std::size_t omegaWarmup = 0;  // EM iterations that hold omega at its starting value
  std::size_t alphaWarmup = 0;  // EM iterations before alpha updates start
  std::size_t restarts = 1;     // fit(): independent random starts, best final training ELBO kept
  ThetaOmegaConfig mstep;
};

struct FitResult {
  FiniteM3Model model;
  std::vector<double> elboTrace;  // corpus ELBO after each E-step
  std::vector<VariationalState> states;
  std::size_t infeasibleMSteps = 0;
  std::size_t clampedDocuments = 0;
};

// Theta rows from Dirichlet(1), alphas at initAlpha, omega at fixOmega or initOmega.
FiniteM3Model initialModel(std::size_t k1, std::size_t k2, std::size_t vocabSize, const FitConfig& config,
                          std::size_t restart = 0);

// Variational EM from a given starting model.
FitResult fitFrom(FiniteM3Model model, std::span<const Document> corpus, const FitConfig& config);
FitResult fit(std::span<const Document> corpus, std::size_t vocabSize, std::size_t k1, std::size_t k2,
              const FitConfig& config);

// The LDA baseline is the omega = 1, K2 = 1 configuration of the same trainer.
FitConfig ldaConfig(FitConfig config);
FitResult fitLda(std::span<const Document> corpus, std::size_t vocabSize, std::size_t k,
                 const FitConfig& config);

// Per-document bound on held-out documents.
std::vector<double> heldOutBounds(const FiniteM3Model& model, std::span<const Document> docs,
                                  std::size_t maxIters = 200, double tol = 1e-9);

}  // namespace m3mix
