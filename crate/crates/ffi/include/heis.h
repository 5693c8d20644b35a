#ifndef HEIS_H
#define HEIS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HeisCloudKind {
  HEIS_CLOUD_KIND_CUBE = 0,
  HEIS_CLOUD_KIND_LINE = 1,
  HEIS_CLOUD_KIND_PLANE = 2,
} HeisCloudKind;

typedef enum HeisStatus {
  HEIS_STATUS_OK = 0,
  HEIS_STATUS_NULL_POINTER = 1,
  HEIS_STATUS_INVALID_ARGUMENT = 2,
  HEIS_STATUS_NON_FINITE = 3,
  HEIS_STATUS_NOT_VERTICAL = 4,
  HEIS_STATUS_EMPTY_CLOUD = 5,
  HEIS_STATUS_TOO_FEW_SCALES = 6,
  HEIS_STATUS_DEGENERATE = 7,
  HEIS_STATUS_IO = 8,
  HEIS_STATUS_PARSE = 9,
  HEIS_STATUS_PANIC = 10,
} HeisStatus;

/*
 Opaque weighted point cloud.
 */
typedef struct HeisCloud HeisCloud;

typedef struct HeisPoint {
  double x;
  double y;
  double t;
} HeisPoint;

typedef struct HeisDimensionEstimate {
  double slope;
  double intercept;
  double r_squared;
  double window_lo;
  double window_hi;
  /*
   Nonzero when the measured quantity did not vary with scale.
   */
  int32_t degenerate;
} HeisDimensionEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failing call on this thread; empty after a
 success. Valid until the next call into this library on the same thread.
 */
const char *heis_last_error(void);

/*
 Korányi distance.

 # Safety
 `out` must be valid for writes.
 */
enum HeisStatus heis_dist(struct HeisPoint a, struct HeisPoint b, double *out);

/*
 Group product `a * b`.

 # Safety
 `out` must be valid for writes.
 */
enum HeisStatus heis_mul(struct HeisPoint a, struct HeisPoint b, struct HeisPoint *out);

/*
 Projection of `v` to the vertical subgroup orthogonal to angle `theta`.

 # Safety
 `out` must be valid for writes.
 */
enum HeisStatus heis_vertical_projection(double theta, struct HeisPoint v, struct HeisPoint *out);

/*
 Lower bound on projected dimension for sets of dimension `s` in (2, 4].

 # Safety
 `out` must be valid for writes.
 */
enum HeisStatus heis_bound_theorem(double s, double *out);

/*
 Solves for the point whose second Korányi component vanishes against
 all three inputs. Returns `Degenerate` for (near-)collinear inputs.

 # Safety
 `out` must be valid for writes.
 */
enum HeisStatus heis_triple_solve(struct HeisPoint v1,
                                  struct HeisPoint v2,
                                  struct HeisPoint v3,
                                  struct HeisPoint *out);

/*
 Samples `n` points of a reference set; `theta` orients the line and
 the plane and is ignored for the cube.

 # Safety
 `out` must be valid for writes. On success `*out` owns a new cloud.
 */
enum HeisStatus heis_cloud_sample(enum HeisCloudKind kind,
                                  size_t n,
                                  double theta,
                                  uint64_t seed,
                                  struct HeisCloud **out);

/*
 Self-similar cloud with `m` maps of ratio 1/2 iterated `depth` times.

 # Safety
 `out` must be valid for writes. On success `*out` owns a new cloud.
 */
enum HeisStatus heis_cloud_ifs(size_t m, uint32_t depth, uint64_t seed, struct HeisCloud **out);

/*
 Copies `n` points and optional weights (NULL for unit weights).

 # Safety
 `points` must hold `n` readable points, `weights` `n` doubles when not
 NULL, and `out` must be valid for writes.
 */
enum HeisStatus heis_cloud_from_points(const struct HeisPoint *points,
                                       const double *weights,
                                       size_t n,
                                       struct HeisCloud **out);

/*
 Number of points, or 0 for NULL.

 # Safety
 `cloud` must be NULL or a live handle.
 */
size_t heis_cloud_len(const struct HeisCloud *cloud);

/*
 Copies point `i` and its weight.

 # Safety
 `cloud` must be a live handle; `point` and `weight` valid for writes.
 */
enum HeisStatus heis_cloud_get(const struct HeisCloud *cloud,
                               size_t i,
                               struct HeisPoint *point,
                               double *weight);

/*
 Releases a cloud. NULL is a no-op.

 # Safety
 `cloud` must be NULL or a handle not yet freed.
 */
void heis_cloud_free(struct HeisCloud *cloud);

/*
 Reads a cloud file.

 # Safety
 `path` must be a NUL-terminated string and `out` valid for writes.
 */
enum HeisStatus heis_cloud_read(const char *path, struct HeisCloud **out);

/*
 Writes a cloud file.

 # Safety
 `cloud` must be a live handle and `path` a NUL-terminated string.
 */
enum HeisStatus heis_cloud_write(const struct HeisCloud *cloud, const char *path);

/*
 Box-counting dimension over the given scales.

 # Safety
 `cloud` must be a live handle, `scales` hold `n_scales` doubles, `out`
 be valid for writes.
 */
enum HeisStatus heis_box_dimension(const struct HeisCloud *cloud,
                                   const double *scales,
                                   size_t n_scales,
                                   struct HeisDimensionEstimate *out);

/*
 Empirical Frostman exponent over the given radii.

 # Safety
 As for [`heis_box_dimension`].
 */
enum HeisStatus heis_frostman(const struct HeisCloud *cloud,
                              const double *radii,
                              size_t n_radii,
                              size_t centers_per_radius,
                              uint64_t seed,
                              struct HeisDimensionEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEIS_H */
