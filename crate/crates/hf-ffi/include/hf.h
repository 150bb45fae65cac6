/* C interface for the homogeneous-flow laboratory. Generated; do not edit. */

#ifndef HF_FFI_H
#define HF_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Side selector for reference framings: 0 = left, 1 = right.
 */
typedef enum HfSide {
  HfSide_Left = 0,
  HfSide_Right = 1,
} HfSide;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HfStatus {
  HfStatus_Ok = 0,
  /**
   * a precondition on the inputs failed
   */
  HfStatus_InvalidInput = 1,
  /**
   * a field was numerically singular at some node
   */
  HfStatus_Singular = 2,
  /**
   * an internal numerical procedure failed
   */
  HfStatus_Numeric = 3,
  /**
   * configuration text was rejected
   */
  HfStatus_Config = 4,
  /**
   * file I/O or serialization failed
   */
  HfStatus_Io = 5,
  /**
   * a required pointer argument was null
   */
  HfStatus_NullPointer = 6,
  /**
   * a string argument was not valid UTF-8
   */
  HfStatus_Utf8 = 7,
  /**
   * an internal panic was caught at the boundary
   */
  HfStatus_Panic = 8,
} HfStatus;

/**
 * Opaque framing handle.
 */
typedef struct HfFraming HfFraming;

/**
 * Opaque gauge-field handle.
 */
typedef struct HfGauge HfGauge;

/**
 * Opaque grid handle.
 */
typedef struct HfGrid HfGrid;

/**
 * Flow controls, mirroring the core parameter set.
 * `contraction`: 0 = div_k, 1 = trace_i. `integrator`: 0 = rk4,
 * 1 = euler. `step_control`: 0 = fixed, 1 = halving.
 */
typedef struct HfFlowParams {
  double dt;
  double t_max;
  uint64_t max_steps;
  double tol_h;
  double tol_drift;
  uint64_t window;
  uint64_t sample_stride;
  uint64_t snapshot_stride;
  int32_t contraction;
  int32_t integrator;
  int32_t step_control;
} HfFlowParams;

/**
 * How a flow run ended: 0 = completed, 1 = positivity lost, 2 = blow-up,
 * 3 = step limit.
 */
typedef struct HfRunReport {
  int32_t outcome;
  /**
   * time associated with the outcome (t_max when completed)
   */
  double outcome_t;
  /**
   * node at which positivity failed, else u64::MAX
   */
  uint64_t outcome_node;
  uint64_t steps;
  uint64_t recorded_rows;
  double final_sup_h;
  double final_sup_r;
  int32_t converged;
  /**
   * plateau entry time; NaN when not converged
   */
  double t_prime;
  int32_t orbit_preserved;
} HfRunReport;

/**
 * Lie-limit report, mirroring the core analysis. `classification`:
 * 0 = su2, 1 = abelian, 2 = other.
 */
typedef struct HfLieReport {
  double constancy_residual;
  double jacobi_residual;
  double killing_eigenvalues[3];
  int32_t classification;
  int32_t globalizable;
} HfLieReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the message of the most recent error on this thread into `buf`
 * (NUL-terminated, truncated to `cap` bytes). Returns the full message
 * length in bytes, so callers can detect truncation; with a null buffer
 * or zero capacity nothing is copied.
 */
uintptr_t hf_last_error_message(char *buf, uintptr_t cap);

/**
 * Build a grid with the given sample counts.
 */
enum HfStatus hf_grid_build(uintptr_t n_alpha,
                            uintptr_t n_beta,
                            uintptr_t n_gamma,
                            struct HfGrid **out);

void hf_grid_free(struct HfGrid *grid);

/**
 * Number of nodes in the grid, or 0 for a null handle.
 */
uintptr_t hf_grid_node_count(const struct HfGrid *grid);

/**
 * The reference (Lie) framing of the requested side.
 */
enum HfStatus hf_framing_reference(const struct HfGrid *grid,
                                   enum HfSide side,
                                   struct HfFraming **out);

void hf_framing_free(struct HfFraming *w);

void hf_gauge_free(struct HfGauge *a);

/**
 * Seeded random deformation exp(eps*s) on the grid (see the core library
 * for the construction); deterministic in the seed.
 */
enum HfStatus hf_gauge_random_deformation(const struct HfGrid *grid,
                                          uint64_t seed,
                                          double eps,
                                          uintptr_t cutoff,
                                          struct HfGauge **out);

/**
 * The 2:1 covering map as a rotation-valued gauge field (degree +1).
 */
enum HfStatus hf_gauge_covering_map(const struct HfGrid *grid, struct HfGauge **out);

/**
 * Apply a gauge field to a framing (pointwise source composition).
 */
enum HfStatus hf_framing_apply_gauge(const struct HfFraming *w,
                                     const struct HfGauge *a,
                                     struct HfFraming **out);

/**
 * Save a framing to a container file.
 */
enum HfStatus hf_framing_save(const struct HfFraming *w, const char *path);

/**
 * Load a framing from a container file.
 */
enum HfStatus hf_framing_load(const char *path, struct HfFraming **out);

/**
 * Fill `out` with the default flow parameters.
 */
enum HfStatus hf_flow_params_default(struct HfFlowParams *out);

/**
 * Integrate the flow from `w`. `gauge_form` selects the state variable
 * (0: the framing itself, 1: the relative gauge). On success `out_final`
 * (when non-null) receives the final framing as a new handle.
 */
enum HfStatus hf_flow_run(const struct HfFraming *w,
                          const struct HfFlowParams *params,
                          int32_t gauge_form,
                          struct HfRunReport *report,
                          struct HfFraming **out_final);

/**
 * Degree of a gauge field: projects to rotations first when needed.
 * `was_projected` (when non-null) records whether projection happened.
 */
enum HfStatus hf_gauge_degree(const struct HfGauge *a,
                              double *raw,
                              int64_t *rounded,
                              int32_t *was_projected);

/**
 * Local-Lie-group check of a framing at the given constancy tolerance.
 */
enum HfStatus hf_llg_check(const struct HfFraming *w, double tol, struct HfLieReport *out);

/**
 * Parse a key=value config text purely for validation. Useful for host
 * applications that stage configs before shelling out to the CLI.
 */
enum HfStatus hf_config_validate(const char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HF_FFI_H */
