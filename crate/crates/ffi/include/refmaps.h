/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef REFMAPS_H
#define REFMAPS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of a fallible call.
 */
typedef enum RefmapsStatus {
  REFMAPS_STATUS_OK = 0,
  REFMAPS_STATUS_NULL_POINTER = 1,
  REFMAPS_STATUS_INVALID_ARGUMENT = 2,
  REFMAPS_STATUS_DIMENSION_MISMATCH = 3,
  REFMAPS_STATUS_INVALID_NORMAL = 4,
  REFMAPS_STATUS_INVALID_PROBLEM = 5,
  REFMAPS_STATUS_NUMERICAL_FAILURE = 6,
  REFMAPS_STATUS_DEGENERATE = 7,
  REFMAPS_STATUS_UNSUPPORTED = 8,
  REFMAPS_STATUS_IO = 9,
  REFMAPS_STATUS_FORMAT = 10,
  REFMAPS_STATUS_INVALID_SPEC = 11,
  REFMAPS_STATUS_PANIC = 12,
} RefmapsStatus;

/*
 A multi-view problem under construction or loaded from disk.
 */
typedef struct RefmapsProblem RefmapsProblem;

/*
 Output of `refmaps_solve`.
 */
typedef struct RefmapsSolution RefmapsSolution;

/*
 Solver settings; start from `refmaps_config_default`.
 */
typedef struct RefmapsConfig {
  double lambda;
  double mu;
  double delta;
  double rel_energy_tol;
  double cg_tol;
  uint32_t max_outer_iters;
  /*
   0 picks the solver's default.
   */
  uint32_t cg_max_iters;
  uint32_t threads;
  bool normalize;
} RefmapsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *refmaps_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *refmaps_version(void);

/*
 Default settings for the given smoothness and consistency weights.
 */
struct RefmapsConfig refmaps_config_default(double lambda, double mu);

/*
 Huber loss of `x` with threshold `delta`.
 */
double refmaps_huber(double x, double delta);

/*
 Quadratic majorant of the Huber loss anchored at `x0`, evaluated at `x`.
 */
double refmaps_huber_majorant(double x, double x0, double delta);

/*
 Lifts the unit normal `n[3]` to the 9-vector `out[9]`.

 # Safety
 `n` must point to 3 readable doubles and `out` to 9 writable doubles.
 */
enum RefmapsStatus refmaps_lift_normal(const double *n, double *out);

/*
 Creates an empty problem with 1 or 3 channels.

 # Safety
 `out` must be a valid pointer; on success it receives a handle to free
 with `refmaps_problem_free`.
 */
enum RefmapsStatus refmaps_problem_new(uint32_t channels, struct RefmapsProblem **out);

/*
 Loads a dataset directory (or its manifest file) written by the
 `refmaps` tool.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RefmapsStatus refmaps_problem_load(const char *path, struct RefmapsProblem **out);

/*
 Releases a problem; NULL is ignored.

 # Safety
 `problem` must come from this library and not be used afterwards.
 */
void refmaps_problem_free(struct RefmapsProblem *problem);

/*
 Appends a view. `mask` holds `width·height` bytes (nonzero = inside),
 `images` `channels·width·height` doubles, one plane per channel, and
 `normals` `3·width·height` doubles. Values outside the mask are ignored;
 normals inside it must have unit length.

 # Safety
 The arrays must have the stated lengths; `problem` must be a live handle.
 */
enum RefmapsStatus refmaps_problem_add_view(struct RefmapsProblem *problem,
                                            size_t width,
                                            size_t height,
                                            const uint8_t *mask,
                                            const double *images,
                                            const double *normals);

/*
 Declares that pixel `(row_a, col_a)` of view `view_a` and pixel
 `(row_b, col_b)` of view `view_b` image the same surface point. Both
 views must already have been added.

 # Safety
 `problem` must be a live handle.
 */
enum RefmapsStatus refmaps_problem_add_correspondence(struct RefmapsProblem *problem,
                                                      size_t view_a,
                                                      size_t row_a,
                                                      size_t col_a,
                                                      size_t view_b,
                                                      size_t row_b,
                                                      size_t col_b);

/*
 Number of views added so far.

 # Safety
 `problem` must be a live handle and `out` a valid pointer.
 */
enum RefmapsStatus refmaps_problem_view_count(const struct RefmapsProblem *problem, size_t *out);

/*
 Channel count of the problem.

 # Safety
 `problem` must be a live handle and `out` a valid pointer.
 */
enum RefmapsStatus refmaps_problem_channels(const struct RefmapsProblem *problem, size_t *out);

/*
 Width and height of one view.

 # Safety
 `problem` must be a live handle; `width` and `height` valid pointers.
 */
enum RefmapsStatus refmaps_problem_view_size(const struct RefmapsProblem *problem,
                                             size_t view,
                                             size_t *width,
                                             size_t *height);

/*
 Runs the solver on every channel.

 # Safety
 `problem` must be a live handle, `config` a valid pointer, and `out` a
 valid pointer that receives a handle to free with `refmaps_solution_free`.
 */
enum RefmapsStatus refmaps_solve(const struct RefmapsProblem *problem,
                                 const struct RefmapsConfig *config,
                                 struct RefmapsSolution **out);

/*
 Releases a solution; NULL is ignored.

 # Safety
 `solution` must come from this library and not be used afterwards.
 */
void refmaps_solution_free(struct RefmapsSolution *solution);

/*
 Copies one reflectance map (`width·height` doubles, 0 outside the mask)
 into `out`, whose length `len` must match.

 # Safety
 `solution` must be a live handle and `out` must hold `len` doubles.
 */
enum RefmapsStatus refmaps_solution_reflectance(const struct RefmapsSolution *solution,
                                                size_t view,
                                                size_t channel,
                                                double *out,
                                                size_t len);

/*
 Copies one lighting vector into `out[9]`.

 # Safety
 `solution` must be a live handle and `out` must hold 9 doubles.
 */
enum RefmapsStatus refmaps_solution_lighting(const struct RefmapsSolution *solution,
                                             size_t view,
                                             size_t channel,
                                             double *out);

/*
 Outer iterations run, final total energy and whether the relative-energy
 criterion stopped the solver, for one channel. Any output may be NULL.

 # Safety
 `solution` must be a live handle; non-NULL outputs must be valid.
 */
enum RefmapsStatus refmaps_solution_summary(const struct RefmapsSolution *solution,
                                            size_t channel,
                                            size_t *iterations,
                                            double *energy,
                                            bool *converged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REFMAPS_H */
