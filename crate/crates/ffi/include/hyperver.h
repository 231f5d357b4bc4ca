#ifndef HYPERVER_H
#define HYPERVER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HvLayout {
  HV_LAYOUT_DEFAULT = 0,
  HV_LAYOUT_GOAL11 = 1,
  HV_LAYOUT_GOAL01 = 2,
} HvLayout;

typedef enum HvMethod {
  HV_METHOD_BAYES = 0,
  HV_METHOD_SPRT = 1,
} HvMethod;

typedef enum HvOutcome {
  HV_OUTCOME_TRUE = 0,
  HV_OUTCOME_FALSE = 1,
  HV_OUTCOME_UNDECIDED = 2,
} HvOutcome;

typedef enum HvReason {
  HV_REASON_NONE = 0,
  HV_REASON_INDIFFERENCE = 1,
  HV_REASON_SAMPLE_CAP = 2,
  HV_REASON_TIMEOUT = 3,
} HvReason;

/**
 * Status code of every fallible call.
 */
typedef enum HvStatus {
  HV_STATUS_OK = 0,
  HV_STATUS_NULL_ARGUMENT = 1,
  HV_STATUS_INVALID_UTF8 = 2,
  HV_STATUS_MODEL_ERROR = 3,
  HV_STATUS_FORMULA_ERROR = 4,
  HV_STATUS_CONFIG_ERROR = 5,
  HV_STATUS_ASSIGNMENT_ERROR = 6,
  HV_STATUS_UNSUPPORTED = 7,
  HV_STATUS_BUDGET_EXCEEDED = 8,
  HV_STATUS_BUFFER_TOO_SMALL = 9,
  HV_STATUS_INTERNAL = 10,
} HvStatus;

/**
 * Opaque formula handle.
 */
typedef struct HvFormula HvFormula;

/**
 * Opaque model handle.
 */
typedef struct HvModel HvModel;

/**
 * Checker settings; obtain defaults from [`hv_config_default`].
 */
typedef struct HvConfig {
  double alpha;
  double beta;
  double prior_a;
  double prior_b;
  double kappa;
  double delta_cap;
  uint64_t max_samples;
  /**
   * Seconds; 0 disables the limit.
   */
  double timeout_s;
  uint64_t seed;
  enum HvMethod method;
  double sprt_eps;
  bool use_cache;
} HvConfig;

typedef struct HvVerdict {
  enum HvOutcome outcome;
  enum HvReason reason;
  uint64_t samples;
  uint64_t total_samples;
  double seconds;
} HvVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library and valid until the next failing call.
 */
const char *hv_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void hv_string_free(char *s);

/**
 * Parses a model in the text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvStatus hv_model_parse(const char *text, struct HvModel **out);

/**
 * Generates the two-robot grid world of side `n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HvStatus hv_model_gridworld(size_t n, enum HvLayout layout, struct HvModel **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not yet freed.
 */
void hv_model_free(struct HvModel *m);

/**
 * Number of states, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t hv_model_num_states(const struct HvModel *m);

/**
 * Looks up a state index by name.
 *
 * # Safety
 * `m` must be a live handle, `name` a NUL-terminated string, `out` valid.
 */
enum HvStatus hv_model_state_index(const struct HvModel *m, const char *name, size_t *out);

/**
 * Model in the text format; free with [`hv_string_free`].
 *
 * # Safety
 * `m` must be a live handle.
 */
char *hv_model_to_text(const struct HvModel *m);

/**
 * Parses a formula.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HvStatus hv_formula_parse(const char *text, struct HvFormula **out);

/**
 * Collision avoidance formula for an `n`×`n` grid with bound `k`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HvStatus hv_formula_psi_ca(size_t n, uint32_t k, double theta, struct HvFormula **out);

/**
 * Collision-free goal reaching formula for `robot` (1 or 2).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum HvStatus hv_formula_psi_goal(size_t n,
                                  uint32_t k,
                                  double theta1,
                                  double theta2,
                                  size_t robot,
                                  struct HvFormula **out);

/**
 * # Safety
 * `f` must be null or a handle from this library not yet freed.
 */
void hv_formula_free(struct HvFormula *f);

/**
 * Canonical text of the formula; free with [`hv_string_free`].
 *
 * # Safety
 * `f` must be a live handle.
 */
char *hv_formula_to_string(const struct HvFormula *f);

struct HvConfig hv_config_default(void);

/**
 * Checks `formula` on `model`. Variable `vars[i]` is bound to a path
 * sampled from state `starts[i]` using `config.seed`.
 *
 * # Safety
 * Handles must be live; `vars` and `starts` must hold `len` entries;
 * `config` and `out` must be valid pointers.
 */
enum HvStatus hv_check(const struct HvModel *model,
                       const struct HvFormula *formula,
                       const char *const *vars,
                       const size_t *starts,
                       size_t len,
                       const struct HvConfig *config,
                       struct HvVerdict *out);

/**
 * Exact verdict of a formula whose root is a probability operator.
 * Writes the verdict and up to `probs_cap` probabilities; `probs_len`
 * receives the number of Pr arguments. Fails with `BufferTooSmall` when
 * `probs_cap` is smaller than that.
 *
 * # Safety
 * Handles must be live; `vars`/`starts` hold `len` entries; `probs` holds
 * `probs_cap` entries (may be null when `probs_cap` is 0); the remaining
 * out pointers must be valid.
 */
enum HvStatus hv_exact_verdict(const struct HvModel *model,
                               const struct HvFormula *formula,
                               const char *const *vars,
                               const size_t *starts,
                               size_t len,
                               uint64_t seed,
                               bool *verdict,
                               double *probs,
                               size_t probs_cap,
                               size_t *probs_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERVER_H */
