#ifndef REACTIVE_SYNTH_H
#define REACTIVE_SYNTH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * System player.
 */
#define RS_SYSTEM 0

/**
 * Environment player.
 */
#define RS_ENVIRONMENT 1

/**
 * Result of every call.
 */
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  /**
   * The call worked but found no strategy, or the game is false.
   */
  RS_STATUS_NOT_FOUND = 1,
  RS_STATUS_INVALID_ARGUMENT = 2,
  RS_STATUS_BUDGET_EXHAUSTED = 3,
  RS_STATUS_SYNTAX = 4,
  RS_STATUS_DIMENSION = 5,
  RS_STATUS_IO = 6,
  RS_STATUS_NULL_POINTER = 7,
  RS_STATUS_PANIC = 8,
} RsStatus;

/**
 * Parsed formula.
 */
typedef struct RsFormula RsFormula;

/**
 * Loaded problem: plant, formula and solver settings.
 */
typedef struct RsProblem RsProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *rs_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void rs_string_free(char *s);

/**
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_formula_parse(const char *src, struct RsFormula **out);

/**
 * # Safety
 * `f` must come from [`rs_formula_parse`] and not have been freed.
 */
void rs_formula_free(struct RsFormula *f);

/**
 * Steps needed after `t` to evaluate the formula.
 *
 * # Safety
 * `f` must be a live formula handle.
 */
size_t rs_formula_horizon(const struct RsFormula *f);

/**
 * Robustness at step `t` of the trace stored row-major in `samples`
 * (`len` steps of `dim` values).
 *
 * # Safety
 * `f` must be live; `samples` must hold `len * dim` values; `out` writable.
 */
enum RsStatus rs_formula_robustness(const struct RsFormula *f,
                                    const double *samples,
                                    size_t len,
                                    size_t dim,
                                    size_t t,
                                    double *out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_problem_from_json(const char *json, struct RsProblem **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RsStatus rs_problem_load(const char *path, struct RsProblem **out);

/**
 * # Safety
 * `p` must come from this library and not have been freed.
 */
void rs_problem_free(struct RsProblem *p);

/**
 * Dominant input sequence for `who` (`RS_SYSTEM` or `RS_ENVIRONMENT`).
 * Writes the outcome as JSON to `out_json` in every non-error case.
 *
 * # Safety
 * `p` must be live; `out_json` must be writable.
 */
enum RsStatus rs_synth_dominant(const struct RsProblem *p, int who, char **out_json);

/**
 * Reactive decision tree as JSON (`null` tree when none was found).
 *
 * # Safety
 * `p` must be live; `out_json` must be writable.
 */
enum RsStatus rs_synth_tree(const struct RsProblem *p, char **out_json);

/**
 * Truth of a game string such as `"E1 A1 A2 E2"`, with its witness as JSON.
 *
 * # Safety
 * `p` must be live; `game` NUL-terminated; `out_json` writable.
 */
enum RsStatus rs_eval_game(const struct RsProblem *p, const char *game, char **out_json);

/**
 * SMT-LIB2 script for `free` against the opponent's flattened sequence.
 *
 * # Safety
 * `p` must be live; `fixed` must hold `len` values; `out` writable.
 */
enum RsStatus rs_export_smt(const struct RsProblem *p,
                            int free,
                            const double *fixed,
                            size_t len,
                            bool negate,
                            char **out);

/**
 * Library version, static storage.
 */
const char *rs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REACTIVE_SYNTH_H */
