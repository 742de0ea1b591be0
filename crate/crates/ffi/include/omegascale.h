#ifndef OMEGASCALE_H
#define OMEGASCALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Exit transforms, in the order of the Rust enum.
 */
typedef enum {
  OS_EXIT_KIND_TWO_SIDED_UP = 0,
  OS_EXIT_KIND_TWO_SIDED_DOWN = 1,
  OS_EXIT_KIND_ONE_SIDED_DOWN = 2,
  OS_EXIT_KIND_ONE_SIDED_UP = 3,
  OS_EXIT_KIND_REFLECTED_UP = 4,
  OS_EXIT_KIND_REFLECTED_DUAL = 5,
} OsExitKind;

/**
 * Status codes.
 */
typedef enum {
  OS_STATUS_OK = 0,
  OS_STATUS_NULL_POINTER = 1,
  /**
   * Bad parameters, malformed JSON, invalid UTF-8.
   */
  OS_STATUS_INVALID_INPUT = 2,
  /**
   * Query outside the domain of the function (x > c, outside the table).
   */
  OS_STATUS_DOMAIN = 3,
  /**
   * Solver or series failure.
   */
  OS_STATUS_NUMERIC = 4,
  OS_STATUS_NOT_CONVERGED = 5,
  OS_STATUS_PANIC = 6,
} OsStatus;

/**
 * A Lévy model.
 */
typedef struct OsModel OsModel;

/**
 * A killing-rate function ω.
 */
typedef struct OsOmega OsOmega;

/**
 * Tabulated 𝒲^(ω), 𝒵^(ω).
 */
typedef struct OsScaleTable OsScaleTable;

/**
 * Exit-problem solver bound to one model, ω and grid.
 */
typedef struct OsSolver OsSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, empty after a success. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *os_last_error(void);

/**
 * Brownian motion with drift `mu` and volatility `sigma`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
OsStatus os_model_brownian(double mu, double sigma, OsModel **out);

/**
 * Cramér–Lundberg with premium rate `mu`, claim intensity `vartheta`, Exp(`rho`) claims.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
OsStatus os_model_cramer_lundberg(double mu, double vartheta, double rho, OsModel **out);

/**
 * Model from the JSON form used in CLI configs. Relative table paths
 * resolve against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `out` a valid pointer.
 */
OsStatus os_model_from_json(const char *json, OsModel **out);

/**
 * # Safety
 * `model` must come from an `os_model_*` constructor or be null.
 */
void os_model_free(OsModel *model);

/**
 * ψ(θ).
 *
 * # Safety
 * Pointers must be valid.
 */
OsStatus os_model_psi(const OsModel *model, double theta, double *out);

/**
 * Classical W^(q)(x) and Z^(q)(x). Either out-pointer may be null.
 *
 * # Safety
 * `model` must be valid.
 */
OsStatus os_classical_scale(const OsModel *model, double q, double x, double *w_out, double *z_out);

/**
 * ω ≡ q.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
OsStatus os_omega_constant(double q, OsOmega **out);

/**
 * ω = p + q·1{a < x < b}; pass `b = INFINITY` for a half-line.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
OsStatus os_omega_band(double p, double q, double a, double b, OsOmega **out);

/**
 * ω from the JSON form used in CLI configs.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `out` a valid pointer.
 */
OsStatus os_omega_from_json(const char *json, OsOmega **out);

/**
 * # Safety
 * `omega` must come from an `os_omega_*` constructor or be null.
 */
void os_omega_free(OsOmega *omega);

/**
 * Solve for 𝒲^(ω), 𝒵^(ω) on `[0, x_max]` with step `h`.
 *
 * # Safety
 * Pointers must be valid.
 */
OsStatus os_scale_table_build(const OsModel *model,
                              const OsOmega *omega,
                              double x_max,
                              double h,
                              OsScaleTable **out);

/**
 * 𝒲^(ω)(x) and 𝒵^(ω)(x). Either out-pointer may be null.
 *
 * # Safety
 * `table` must be valid.
 */
OsStatus os_scale_table_eval(const OsScaleTable *table, double x, double *w_out, double *z_out);

/**
 * Number of grid nodes; 0 for a null handle.
 *
 * # Safety
 * `table` must be valid or null.
 */
size_t os_scale_table_len(const OsScaleTable *table);

/**
 * Copy up to `cap` rows of (x, 𝒲, 𝒵) into the three arrays; `written`
 * receives the row count. Null arrays are skipped.
 *
 * # Safety
 * Non-null arrays must hold `cap` doubles.
 */
OsStatus os_scale_table_copy(const OsScaleTable *table,
                             double *x,
                             double *w,
                             double *z,
                             size_t cap,
                             size_t *written);

/**
 * # Safety
 * `table` must come from [`os_scale_table_build`] or be null.
 */
void os_scale_table_free(OsScaleTable *table);

/**
 * Solver for exit transforms. Tables are built lazily per barrier and cached.
 *
 * # Safety
 * Pointers must be valid.
 */
OsStatus os_solver_new(const OsModel *model,
                       const OsOmega *omega,
                       double x_max,
                       double h,
                       OsSolver **out);

/**
 * Exit transform of `kind` from `x` for the barriers `z <= x <= c`. For
 * [`OsExitKind::OneSidedDown`] the survival part goes to `survive`, which
 * may be null; it is NaN for the other kinds.
 *
 * # Safety
 * `solver` and `value` must be valid.
 */
OsStatus os_solver_exit(const OsSolver *solver,
                        OsExitKind kind,
                        double x,
                        double c,
                        double z,
                        double *value,
                        double *survive);

/**
 * # Safety
 * `solver` must come from [`os_solver_new`] or be null.
 */
void os_solver_free(OsSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OMEGASCALE_H */
