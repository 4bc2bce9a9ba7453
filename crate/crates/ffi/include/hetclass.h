/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef HETCLASS_H
#define HETCLASS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_PARSE_ERROR = 3,
  HC_STATUS_VALIDATION_ERROR = 4,
  HC_STATUS_ANALYSIS_ERROR = 5,
  HC_STATUS_IO_ERROR = 6,
  HC_STATUS_INVALID_ARGUMENT = 7,
  HC_STATUS_BUFFER_TOO_SMALL = 8,
  HC_STATUS_PANIC = 9,
} HcStatus;

typedef enum HcVerdict {
  HC_VERDICT_DOMINATED = 0,
  HC_VERDICT_NOT_DOMINATED = 1,
  HC_VERDICT_INCONCLUSIVE = 2,
} HcVerdict;

typedef enum HcClassKind {
  HC_CLASS_KIND_SINK = 0,
  HC_CLASS_KIND_SOURCE = 1,
  HC_CLASS_KIND_SADDLE = 2,
  HC_CLASS_KIND_NEUTRAL = 3,
} HcClassKind;

/**
 * Opaque heteroclinic graph.
 */
typedef struct HcGraph HcGraph;

/**
 * Opaque matrix word.
 */
typedef struct HcMatrixWord HcMatrixWord;

/**
 * Classification of a periodic word; `index` is the stable index of a
 * saddle and 0 otherwise.
 */
typedef struct HcClass {
  enum HcClassKind kind;
  size_t index;
} HcClass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the latest call on this thread if it failed, or null. Valid
 * until the next call into this library from the same thread.
 */
const char *hc_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *hc_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void hc_string_free(char *s);

/**
 * Create a matrix word of `period` square matrices of size `dim`, given
 * row-major in `data` (`period * dim * dim` values, entry 0 applied first).
 *
 * # Safety
 * `data` must point to `period * dim * dim` readable doubles and `out` must
 * be writable.
 */
enum HcStatus hc_word_new(size_t dim, size_t period, const double *data, struct HcMatrixWord **out);

/**
 * # Safety
 * `w` must be null or a handle from [`hc_word_new`], not yet freed.
 */
void hc_word_free(struct HcMatrixWord *w);

/**
 * Dimension of the word, or 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t hc_word_dim(const struct HcMatrixWord *w);

/**
 * Period of the word, or 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t hc_word_period(const struct HcMatrixWord *w);

/**
 * Ascending Lyapunov exponents (`dim` values).
 *
 * # Safety
 * `w` must be a live handle; `out` must hold `capacity` doubles and
 * `out_len` must be writable.
 */
enum HcStatus hc_word_exponents(const struct HcMatrixWord *w,
                                double *out,
                                size_t capacity,
                                size_t *out_len);

/**
 * Lyapunov map values `σ_0 … σ_d` (`dim + 1` values).
 *
 * # Safety
 * As for [`hc_word_exponents`].
 */
enum HcStatus hc_word_lyapunov_map(const struct HcMatrixWord *w,
                                   double *out,
                                   size_t capacity,
                                   size_t *out_len);

/**
 * Finite-time domination test at `index` over `horizon` steps with rate
 * `rate` (> 1).
 *
 * # Safety
 * `w` must be a live handle; the out-pointers must be writable.
 */
enum HcStatus hc_word_domination(const struct HcMatrixWord *w,
                                 size_t index,
                                 size_t horizon,
                                 double rate,
                                 enum HcVerdict *out_verdict,
                                 double *out_min_log_gap);

/**
 * Sink/source/saddle classification with modulus tolerance `tol`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum HcStatus hc_word_classify(const struct HcMatrixWord *w, double tol, struct HcClass *out);

/**
 * Volume hyperbolicity of the splitting with block dimensions
 * `blocks[0..len]`.
 *
 * # Safety
 * `w` must be a live handle; `blocks` must hold `len` values; `out` must be
 * writable.
 */
enum HcStatus hc_word_volume_hyperbolic(const struct HcMatrixWord *w,
                                        const size_t *blocks,
                                        size_t len,
                                        double rate,
                                        size_t horizon,
                                        bool *out);

/**
 * Index set blocked by a bundle tangency in dimension `dim`.
 *
 * # Safety
 * `out` must hold `capacity` values and `out_len` must be writable.
 */
enum HcStatus hc_tangency_indices(size_t dim,
                                  size_t i_alpha,
                                  size_t i_omega,
                                  size_t d_t,
                                  size_t *out,
                                  size_t capacity,
                                  size_t *out_len);

/**
 * Parse a graph from its canonical JSON form.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum HcStatus hc_graph_from_json(const char *json, struct HcGraph **out);

/**
 * # Safety
 * `g` must be null or a handle from [`hc_graph_from_json`], not yet freed.
 */
void hc_graph_free(struct HcGraph *g);

/**
 * Canonical JSON form of the graph; free with [`hc_string_free`].
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum HcStatus hc_graph_to_json(const struct HcGraph *g, char **out);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum HcStatus hc_graph_is_eulerian(const struct HcGraph *g, bool *out);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum HcStatus hc_graph_strongly_connected(const struct HcGraph *g, bool *out);

/**
 * Edge connectivity; `out_infinite` is set when fewer than two nodes carry
 * edges, in which case `out_level` is 0.
 *
 * # Safety
 * `g` must be a live handle; the out-pointers must be writable.
 */
enum HcStatus hc_graph_edge_connectivity(const struct HcGraph *g,
                                         bool *out_infinite,
                                         size_t *out_level);

/**
 * Mechanical non-domination indices at `node`.
 *
 * # Safety
 * `g` must be a live handle; `node` a nul-terminated string; `out` must
 * hold `capacity` values and `out_len` must be writable.
 */
enum HcStatus hc_graph_mechanical_indices(const struct HcGraph *g,
                                          const char *node,
                                          size_t *out,
                                          size_t capacity,
                                          size_t *out_len);

/**
 * Validate and run a scenario given as JSON text, returning the report
 * JSON through `out_report` (free with [`hc_string_free`]). The report is
 * also returned when the status is `AnalysisError`.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out_report` must be writable.
 */
enum HcStatus hc_run_scenario(const char *json, char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HETCLASS_H */
