#ifndef QOMDP_H
#define QOMDP_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Kind of a loaded model.
typedef enum QomdpKind {
  QOMDP_KIND_MDP = 0,
  QOMDP_KIND_GOAL_MDP = 1,
  QOMDP_KIND_POMDP = 2,
  QOMDP_KIND_GOAL_POMDP = 3,
  QOMDP_KIND_QOMDP = 4,
  QOMDP_KIND_GOAL_QOMDP = 5,
  QOMDP_KIND_QMOP = 6,
} QomdpKind;

// Result of every fallible call.
typedef enum QomdpStatus {
  QOMDP_STATUS_OK = 0,
  // A required pointer argument was null.
  QOMDP_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  QOMDP_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON or an unknown model kind.
  QOMDP_STATUS_PARSE = 3,
  // The model violates one of its invariants.
  QOMDP_STATUS_VALIDATION = 4,
  // The operation does not apply to this kind of model.
  QOMDP_STATUS_UNSUPPORTED = 5,
  // An argument is out of range or inconsistent with the model.
  QOMDP_STATUS_INVALID_ARGUMENT = 6,
  // A node or state budget was exhausted.
  QOMDP_STATUS_BUDGET_EXCEEDED = 7,
  // The POMDP has no QOMDP embedding.
  QOMDP_STATUS_NOT_EMBEDDABLE = 8,
  // A numerical routine failed (non-convergence, zero-probability branch, ...).
  QOMDP_STATUS_NUMERICAL = 9,
  QOMDP_STATUS_IO = 10,
  // A Rust panic was caught at the boundary.
  QOMDP_STATUS_PANIC = 11,
} QomdpStatus;

// Opaque handle to a validated model.
typedef struct QomdpModel QomdpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if none failed yet.
// The pointer stays valid until the next failing call on the same thread.
const char *qomdp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qomdp_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from a `char **` out-parameter of this library and not have been freed.
void qomdp_string_free(char *s);

// Parses and validates a model document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum QomdpStatus qomdp_model_from_json(const char *json, struct QomdpModel **out);

// Loads and validates a model file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum QomdpStatus qomdp_model_load(const char *path, struct QomdpModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
// `model` must come from this library and not have been freed.
void qomdp_model_free(struct QomdpModel *model);

// Kind of `model`.
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QomdpStatus qomdp_model_kind(const struct QomdpModel *model, enum QomdpKind *out);

// Serializes `model` as a model document.
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QomdpStatus qomdp_model_to_json(const struct QomdpModel *model, char **out);

// Optimal finite-horizon value of a POMDP or QOMDP. When `report` is not NULL
// it receives the JSON report including the optimal policy tree.
//
// # Safety
// `model` must be a live handle, `value` writable, `report` NULL or writable.
enum QomdpStatus qomdp_solve(const struct QomdpModel *model,
                             size_t horizon,
                             double *value,
                             char **report);

// Goal reachability verdict as a JSON report. `depth` bounds the search on
// goal QOMDPs (it must be at least 1 there) and is ignored for goal POMDPs.
//
// # Safety
// `model` must be a live handle and `report` a writable pointer.
enum QomdpStatus qomdp_decide_reach(const struct QomdpModel *model, size_t depth, char **report);

// Goal QOMDP encoding of a QMOP instance, as a new handle.
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QomdpStatus qomdp_qmop_reduce(const struct QomdpModel *model, struct QomdpModel **out);

// QOMDP embedding of a POMDP, as a new handle.
//
// # Safety
// `model` must be a live handle and `out` a writable pointer.
enum QomdpStatus qomdp_embed(const struct QomdpModel *model, struct QomdpModel **out);

// Bounded null-sequence search on a QMOP instance, as a JSON report.
//
// # Safety
// `model` must be a live handle and `report` a writable pointer.
enum QomdpStatus qomdp_qmop_search(const struct QomdpModel *model, size_t max_len, char **report);

// Probability that the goal QOMDP built from a QMOP instance is still outside
// the goal after the 1-based action sequence `actions[0..len]`.
//
// # Safety
// `model` must be a live handle, `actions` readable for `len` elements
// (or NULL when `len` is 0) and `out` writable.
enum QomdpStatus qomdp_nongoal_probability(const struct QomdpModel *model,
                                           const size_t *actions,
                                           size_t len,
                                           double *out);

// Monte Carlo probability of reaching the goal of a goal POMDP or goal QOMDP
// under the 1-based action sequence `actions[0..len]`.
//
// # Safety
// `model` must be a live handle, `actions` readable for `len` elements
// (or NULL when `len` is 0) and `probability` writable.
enum QomdpStatus qomdp_simulate(const struct QomdpModel *model,
                                const size_t *actions,
                                size_t len,
                                size_t steps,
                                uint64_t trials,
                                uint64_t seed,
                                double *probability);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QOMDP_H */
