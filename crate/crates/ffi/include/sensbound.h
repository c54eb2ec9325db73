#ifndef SENSBOUND_H
#define SENSBOUND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_ARGUMENT = 2,
  SB_STATUS_XI_OUT_OF_RANGE = 3,
  SB_STATUS_SOLVER_FAILURE = 4,
  SB_STATUS_EQUILIBRIUM_VIOLATION = 5,
  SB_STATUS_NUMERICAL_FAILURE = 6,
  SB_STATUS_OUT_OF_BOUNDS = 7,
  SB_STATUS_PANIC = 8,
} SbStatus;

/**
 * Opaque result of a mesh study.
 */
typedef struct SbStudy SbStudy;

/**
 * Bounds of one case at one mesh.
 */
typedef struct {
  double quantity_value;
  double correction;
  double e_primal;
  double e_dual;
  double lower;
  double upper;
  double kappa;
  double h;
} SbBounds;

/**
 * One mesh-study row.
 */
typedef struct {
  double h;
  double xi;
  double j_h;
  double lower;
  double upper;
  double gap;
  double re_jh;
  double re_gap;
  double solver_res;
  double equil_res;
} SbRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *sb_last_error_message(void);

/**
 * Bounds of a named case (`"frame-J1"`, `"frame-J2"`, `"membrane-J1"`,
 * `"membrane-J2"`) with `divisions` elements per member or per side.
 *
 * # Safety
 * `case_name` must be a NUL-terminated string and `out` writable.
 */
SbStatus sb_bounds(const char *case_name, size_t divisions, double xi, SbBounds *out);

/**
 * Runs a mesh study of a named case. `meshes` lists increasing
 * divisions; `xi` lists coupling weights; `reference` must exceed every
 * entry of `meshes`. On success `*out` owns a new handle.
 *
 * # Safety
 * `case_name` must be a NUL-terminated string, `meshes` and `xi` valid for
 * `n_meshes` and `n_xi` reads, and `out` writable.
 */
SbStatus sb_study_run(const char *case_name,
                      const size_t *meshes,
                      size_t n_meshes,
                      const double *xi,
                      size_t n_xi,
                      size_t reference,
                      SbStudy **out);

/**
 * Number of successful rows of a study.
 *
 * # Safety
 * `study` must come from [`sb_study_run`]; `count` must be writable.
 */
SbStatus sb_study_row_count(const SbStudy *study, size_t *count);

/**
 * Row `index` of a study, ordered by mesh size descending.
 *
 * # Safety
 * `study` must come from [`sb_study_run`]; `row` must be writable.
 */
SbStatus sb_study_row(const SbStudy *study, size_t index, SbRow *row);

/**
 * Reference value of the study QoI for coupling weight `xi`.
 *
 * # Safety
 * `study` must come from [`sb_study_run`]; `value` must be writable.
 */
SbStatus sb_study_reference(const SbStudy *study, double xi, double *value);

/**
 * Whether every row of the study brackets its reference (1) or not (0).
 *
 * # Safety
 * `study` must come from [`sb_study_run`]; `strict` must be writable.
 */
SbStatus sb_study_all_strict(const SbStudy *study, int *strict);

/**
 * Releases a study handle; null is ignored.
 *
 * # Safety
 * `study` must come from [`sb_study_run`] and not be used afterwards.
 */
void sb_study_free(SbStudy *study);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENSBOUND_H */
