/* C interface to the m3mix library. Every object is an opaque handle released with
 * its *_free function; every fallible call returns an m3mix_status and leaves a
 * message for m3mix_last_error() (per thread). */
#ifndef M3MIX_H
#define M3MIX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define M3MIX_API __declspec(dllexport)
#else
#define M3MIX_API __attribute__((visibility("default")))
#endif

typedef enum m3mix_status {
  M3MIX_OK = 0,
  M3MIX_ERR_INVALID_ARGUMENT = 1,
  M3MIX_ERR_NUMERIC = 2,
  M3MIX_ERR_PARSE = 3,
  M3MIX_ERR_IO = 4,
  M3MIX_ERR_UNSUPPORTED_VERSION = 5,
  M3MIX_ERR_INTERNAL = 6
} m3mix_status;

typedef struct m3mix_points m3mix_points;
typedef struct m3mix_corpus m3mix_corpus;
typedef struct m3mix_finite_model m3mix_finite_model;
typedef struct m3mix_chain m3mix_chain;

M3MIX_API const char* m3mix_version(void);
M3MIX_API const char* m3mix_last_error(void);
M3MIX_API const char* m3mix_status_string(m3mix_status status);
/* Worker threads used for parallel work: M3MIX_THREADS if set, else hardware concurrency. */
M3MIX_API size_t m3mix_thread_count(void);

/* Arrays allocated by the library (labels, strings). */
M3MIX_API void m3mix_free_ints(int* p);
M3MIX_API void m3mix_free_string(char* p);

/* ---- point clouds ---- */

/* label_column < 0: no label column. Labels are factor codes in order of first appearance. */
M3MIX_API m3mix_status m3mix_points_read_csv(const char* path, int label_column, m3mix_points** out);
M3MIX_API m3mix_status m3mix_points_write_csv(const m3mix_points* points, const char* path);
/* data is row-major n x dim; labels may be NULL. */
M3MIX_API m3mix_status m3mix_points_from_array(const double* data, size_t n, size_t dim, const int* labels,
                                               m3mix_points** out);
/* The first `means` (at most 5) default means crossed with the first `covs` (at most 2)
 * default covariances, per_cell points each, labels mean * covs + covariance. */
M3MIX_API m3mix_status m3mix_points_gen_factorial(size_t means, size_t covs, size_t per_cell, uint64_t seed,
                                                  m3mix_points** out);
M3MIX_API m3mix_status m3mix_points_gen_unrelated(size_t clusters, size_t per_cluster, uint64_t seed,
                                                 m3mix_points** out);
M3MIX_API size_t m3mix_points_count(const m3mix_points* points);
M3MIX_API size_t m3mix_points_dim(const m3mix_points* points);
M3MIX_API int m3mix_points_has_labels(const m3mix_points* points);
/* Copies n labels into out; n must equal the point count. */
M3MIX_API m3mix_status m3mix_points_labels(const m3mix_points* points, int* out, size_t n);
M3MIX_API void m3mix_points_free(m3mix_points* points);

/* One integer label per line. */
M3MIX_API m3mix_status m3mix_labels_read(const char* path, int** out, size_t* n);
M3MIX_API m3mix_status m3mix_labels_write(const char* path, const int* labels, size_t n);

/* ---- corpora (UCI bag-of-words) ---- */

/* vocab_path may be NULL, which synthesizes w0, w1, ... */
M3MIX_API m3mix_status m3mix_corpus_read(const char* docword_path, const char* vocab_path, m3mix_corpus** out);
M3MIX_API m3mix_status m3mix_corpus_write(const m3mix_corpus* corpus, const char* docword_path,
                                          const char* vocab_path);
M3MIX_API m3mix_status m3mix_corpus_gen_two_factor(size_t k1, size_t k2, size_t vocab, size_t docs, size_t doc_length,
                                                   double omega, double alpha, uint64_t seed, m3mix_corpus** out);
/* head gets the first `count` documents, tail the rest. */
M3MIX_API m3mix_status m3mix_corpus_split(const m3mix_corpus* corpus, size_t count, m3mix_corpus** head,
                                          m3mix_corpus** tail);
M3MIX_API size_t m3mix_corpus_docs(const m3mix_corpus* corpus);
M3MIX_API size_t m3mix_corpus_vocab_size(const m3mix_corpus* corpus);
M3MIX_API size_t m3mix_corpus_tokens(const m3mix_corpus* corpus);
M3MIX_API void m3mix_corpus_free(m3mix_corpus* corpus);

/* ---- finite M3 (variational EM) ---- */

typedef struct m3mix_finite_options {
  size_t em_iters;
  size_t e_iters;
  double e_tol;
  int fix_omega; /* nonzero: omega held at `omega` */
  double omega;  /* fixed value, or the starting value when learned */
  uint64_t seed;
  double init_alpha;
  int learn_alpha;
  size_t alpha_warmup;
  size_t omega_warmup;
  size_t restarts;
} m3mix_finite_options;

M3MIX_API void m3mix_finite_options_default(m3mix_finite_options* options);
M3MIX_API m3mix_status m3mix_finite_fit(const m3mix_corpus* corpus, size_t k1, size_t k2,
                                        const m3mix_finite_options* options, m3mix_finite_model** out);
/* The LDA baseline: omega fixed at 1 and K2 = 1. */
M3MIX_API m3mix_status m3mix_finite_fit_lda(const m3mix_corpus* corpus, size_t k, const m3mix_finite_options* options,
                                            m3mix_finite_model** out);
M3MIX_API m3mix_status m3mix_finite_info(const m3mix_finite_model* model, size_t* k1, size_t* k2, size_t* vocab,
                                         double* omega, double* alpha1, double* alpha2);
/* Corpus ELBO after each E-step of the fit that produced the model (empty after load). */
M3MIX_API size_t m3mix_finite_trace_length(const m3mix_finite_model* model);
M3MIX_API m3mix_status m3mix_finite_trace(const m3mix_finite_model* model, double* out, size_t n);
M3MIX_API m3mix_status m3mix_finite_perplexity(const m3mix_finite_model* model, const m3mix_corpus* docs,
                                               double* out);
/* Predictive word distribution of document `doc` after inference; out has vocab entries. */
M3MIX_API m3mix_status m3mix_finite_predictive(const m3mix_finite_model* model, const m3mix_corpus* corpus,
                                               size_t doc, double* out, size_t vocab);
/* K1 = K2 = 1 model with uniform word distributions over `vocab` words. */
M3MIX_API m3mix_status m3mix_finite_uniform(size_t vocab, m3mix_finite_model** out);
M3MIX_API m3mix_status m3mix_finite_save(const m3mix_finite_model* model, const char* path);
M3MIX_API m3mix_status m3mix_finite_load(const char* path, m3mix_finite_model** out);
M3MIX_API void m3mix_finite_free(m3mix_finite_model* model);

/* ---- infinite and hybrid M3 chains (Gibbs sampling on Gaussian data) ---- */

typedef enum m3mix_init_mode { M3MIX_INIT_SINGLE = 0, M3MIX_INIT_DIAGONAL = 1, M3MIX_INIT_RANDOM = 2 } m3mix_init_mode;

typedef struct m3mix_chain_options {
  double alpha;
  double omega; /* omega + omega1 + omega2 must equal 1 */
  double omega1;
  double omega2;
  size_t sweeps;
  size_t burn_in;
  size_t thin;
  uint64_t seed;
  size_t aux_count;
  m3mix_init_mode init_mode;
  size_t init_cells;
  double prior_scale; /* Lambda0 = prior_scale * data covariance */
} m3mix_chain_options;

M3MIX_API void m3mix_chain_options_default(m3mix_chain_options* options);
M3MIX_API m3mix_status m3mix_chain_fit_infinite(const m3mix_points* points, const m3mix_chain_options* options,
                                                m3mix_chain** out);
/* Omega weights and init mode are ignored; dimension 2 has k2 components. */
M3MIX_API m3mix_status m3mix_chain_fit_hybrid(const m3mix_points* points, size_t k2,
                                              const m3mix_chain_options* options, m3mix_chain** out);
M3MIX_API int m3mix_chain_is_hybrid(const m3mix_chain* chain);
M3MIX_API size_t m3mix_chain_samples(const m3mix_chain* chain);
M3MIX_API size_t m3mix_chain_points(const m3mix_chain* chain);
M3MIX_API size_t m3mix_chain_dim(const m3mix_chain* chain);
/* Per-sweep trace; any output pointer may be NULL. Length is the number of sweeps (0 after load). */
M3MIX_API size_t m3mix_chain_trace_length(const m3mix_chain* chain);
M3MIX_API m3mix_status m3mix_chain_trace(const m3mix_chain* chain, size_t* k1, size_t* k2, double* loglik, size_t n);
/* Joint cell labels of retained sample `sample`; n must equal the point count. */
M3MIX_API m3mix_status m3mix_chain_labels(const m3mix_chain* chain, size_t sample, int* out, size_t n);
M3MIX_API m3mix_status m3mix_chain_nmi(const m3mix_chain* chain, const int* truth, size_t n, size_t stride,
                                       double* out);
M3MIX_API m3mix_status m3mix_chain_density(const m3mix_chain* chain, const double* x, size_t dim, double* out);
/* Density on a regular grid (1-D or 2-D data) written as CSV; peaks may be NULL. */
M3MIX_API m3mix_status m3mix_chain_density_grid(const m3mix_chain* chain, const double* lower, const double* upper,
                                                size_t resolution, const char* csv_path, size_t* peaks);
/* Co-clustering frequency over the retained samples of every chain (one run per
 * sample), points ordered by truth, written as CSV. */
M3MIX_API m3mix_status m3mix_chain_confusion(const m3mix_chain* const* chains, size_t count, const int* truth,
                                             size_t n, const char* csv_path);
M3MIX_API m3mix_status m3mix_chain_save(const m3mix_chain* chain, const char* path);
M3MIX_API m3mix_status m3mix_chain_load(const char* path, m3mix_chain** out);
M3MIX_API void m3mix_chain_free(m3mix_chain* chain);

/* "finite-m3", "infinite-m3-chain" or "hybrid-m3-chain". Caller frees with m3mix_free_string. */
M3MIX_API m3mix_status m3mix_model_file_type(const char* path, char** out);

/* ---- metrics ---- */

M3MIX_API m3mix_status m3mix_nmi(const int* a, const int* b, size_t n, double* out);
M3MIX_API m3mix_status m3mix_perplexity(const double* loglik, const size_t* lengths, size_t n, double* out);

/* ---- experiment reproduction ---- */

/* experiment: "gaussian", "iris" or "topics". data_path is the Iris CSV for "iris" and
 * ignored otherwise. seeds = 0 uses the default of 5. The JSON report is returned in
 * *report (free with m3mix_free_string). */
M3MIX_API m3mix_status m3mix_repro(const char* experiment, const char* data_path, size_t seeds, char** report);

#ifdef __cplusplus
}
#endif

#endif
