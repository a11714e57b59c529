#ifndef APPROXVAR_H
#define APPROXVAR_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum AvStatus {
  AV_STATUS_OK = 0,
  AV_STATUS_NULL_POINTER = 1,
  AV_STATUS_INVALID_ARGUMENT = 2,
  AV_STATUS_PARSE = 3,
  AV_STATUS_IO = 4,
  AV_STATUS_INFEASIBLE = 5,
  // The output buffer is too small; the required length is reported.
  AV_STATUS_BUFFER_TOO_SMALL = 6,
  AV_STATUS_INTERNAL = 7,
} AvStatus;

typedef enum AvOutcome {
  AV_OUTCOME_CERTIFIED = 0,
  AV_OUTCOME_UNCERTIFIED = 1,
  AV_OUTCOME_DIVERGING = 2,
} AvOutcome;

// Opaque sampled function.
typedef struct AvFunction AvFunction;

// Opaque value space.
typedef struct AvSpace AvSpace;

// Certified enclosure of an ε-variation; `upper` is `INFINITY` when no
// bounded path exists.
typedef struct AvBracket {
  double lower;
  double upper;
  bool exact;
} AvBracket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next call on this thread.
const char *av_last_error(void);

// # Safety
// `s` must come from this library or be null.
void av_string_free(char *s);

// # Safety
// `out` must be a valid pointer.
enum AvStatus av_space_scalar(struct AvSpace **out);

// Space from its JSON description, e.g. `{"kind":"coordinate","dim":2}`.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum AvStatus av_space_from_json(const char *json, struct AvSpace **out);

// # Safety
// `space` must be a valid handle.
enum AvStatus av_space_num_pseudometrics(const struct AvSpace *space, size_t *out);

// # Safety
// `space` must come from this library or be null; it is invalid afterwards.
void av_space_free(struct AvSpace *space);

// Scalar function with values `v` at strictly increasing `t`.
//
// # Safety
// `t` and `v` must point to `n` doubles; `out` must be a valid pointer.
enum AvStatus av_function_scalar(const double *t,
                                 const double *v,
                                 size_t n,
                                 struct AvFunction **out);

// Function read from a CSV file with values in `space`.
//
// # Safety
// `path` must be a nul-terminated string; `space` a valid handle.
enum AvStatus av_function_from_csv(const char *path,
                                   const struct AvSpace *space,
                                   struct AvFunction **out);

// # Safety
// `f` must come from this library or be null; it is invalid afterwards.
void av_function_free(struct AvFunction *f);

// # Safety
// `f` must be a valid handle.
enum AvStatus av_function_len(const struct AvFunction *f, size_t *out);

// Grid points into `out[..cap]`; `len` receives the grid size.
//
// # Safety
// `out` must hold `cap` doubles.
enum AvStatus av_function_grid(const struct AvFunction *f, double *out, size_t cap, size_t *len);

// Coordinate `p` of every value; real-valued spaces only.
//
// # Safety
// `out` must hold `cap` doubles.
enum AvStatus av_function_values(const struct AvFunction *f,
                                 size_t p,
                                 double *out,
                                 size_t cap,
                                 size_t *len);

// # Safety
// `f` must be a valid handle and `out` a valid pointer.
enum AvStatus av_jordan_variation(const struct AvFunction *f, size_t p, double *out);

// # Safety
// `f` must be a valid handle and `out` a valid pointer.
enum AvStatus av_oscillation(const struct AvFunction *f, size_t p, double *out);

// Bracket of the ε-variation; `witness`, when not null, receives a
// function attaining the upper bound, or null when it is infinite.
//
// # Safety
// `f` must be a valid handle; `out` a valid pointer; `witness` valid or null.
enum AvStatus av_eps_variation(const struct AvFunction *f,
                               size_t p,
                               double eps,
                               struct AvBracket *out,
                               struct AvFunction **witness);

// ε-variation of each prefix of the grid.
//
// # Safety
// `out` must hold `cap` doubles.
enum AvStatus av_prefix_eps_variation(const struct AvFunction *f,
                                      size_t p,
                                      double eps,
                                      double *out,
                                      size_t cap,
                                      size_t *len);

// Step function within `eps` of `f`, with its jump count.
//
// # Safety
// `f` must be a valid handle; `out` and `jumps` valid pointers.
enum AvStatus av_step_approximant(const struct AvFunction *f,
                                  size_t p,
                                  double eps,
                                  struct AvFunction **out,
                                  size_t *jumps);

// Selection on a built-in sequence with pseudometric 0. `outcome`
// receives the result kind and `json` the full report.
//
// # Safety
// `name` must be a nul-terminated string; `eps` must point to `n_eps`
// doubles; `outcome` and `json` must be valid pointers.
enum AvStatus av_select_builtin(const char *name,
                                const double *eps,
                                size_t n_eps,
                                size_t probe,
                                enum AvOutcome *outcome,
                                char **json);

// Property suite `ess`, `unif`, `selection` or `all`; `passed` reports
// whether every property held.
//
// # Safety
// `suite` must be a nul-terminated string; `passed` and `json` valid
// pointers.
enum AvStatus av_check_run(const char *suite, uint64_t seed, bool *passed, char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APPROXVAR_H */
