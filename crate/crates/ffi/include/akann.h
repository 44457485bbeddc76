#ifndef AKANN_H
#define AKANN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `Ok` is zero; everything else is an error.
 */
typedef enum AkannStatus {
  AKANN_STATUS_OK = 0,
  AKANN_STATUS_INVALID_ARGUMENT = 1,
  AKANN_STATUS_DIMENSION_MISMATCH = 2,
  AKANN_STATUS_DOMAIN = 3,
  AKANN_STATUS_NOT_UNIT_NORM = 4,
  AKANN_STATUS_CONTRACT = 5,
  AKANN_STATUS_QUADRATURE = 6,
  AKANN_STATUS_FORMAT = 7,
  AKANN_STATUS_IO = 8,
  AKANN_STATUS_NULL_POINTER = 9,
  AKANN_STATUS_PANIC = 10,
} AkannStatus;

/**
 * Projection configuration handle.
 */
typedef struct AkannConfig AkannConfig;

/**
 * Row-major `f32` vectors.
 */
typedef struct AkannDataset AkannDataset;

/**
 * HNSW graph, optionally with KS2 metadata.
 */
typedef struct AkannGraph AkannGraph;

typedef struct AkannKs1Index AkannKs1Index;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *akann_last_error(void);

/**
 * Library version as a static string.
 */
const char *akann_version(void);

/**
 * Expected reference cosine of the random configuration with `m`
 * codewords per level on `levels` subspaces of `R^d`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum AkannStatus akann_refangle_bound(size_t m, size_t d, size_t levels, double *out);

/**
 * Builds a configuration. `kind`: 0 sym, 1 pol, 2 ran, 3 gaussian (the
 * on-disk codes). Gaussian requires `levels == 1`.
 *
 * # Safety
 * `out` must be valid for a write; the handle is freed with
 * [`akann_config_free`].
 */
enum AkannStatus akann_config_build(uint8_t kind,
                                    size_t m,
                                    size_t d,
                                    size_t levels,
                                    uint64_t seed,
                                    struct AkannConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for a write.
 */
enum AkannStatus akann_config_load(const char *path, struct AkannConfig **out);

/**
 * # Safety
 * `cfg` must be a live handle and `path` a NUL-terminated string.
 */
enum AkannStatus akann_config_save(const struct AkannConfig *cfg, const char *path);

/**
 * Writes `m`, `d` and `levels`; any out pointer may be null.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum AkannStatus akann_config_shape(const struct AkannConfig *cfg,
                                    size_t *m,
                                    size_t *d,
                                    size_t *levels);

/**
 * Monte-Carlo estimate of the expected reference cosine.
 *
 * # Safety
 * `cfg` must be a live handle; out pointers may be null.
 */
enum AkannStatus akann_config_estimate_j(const struct AkannConfig *cfg,
                                         size_t n,
                                         uint64_t seed,
                                         double *mean,
                                         double *std_err);

/**
 * Reference codes (one per level) and reference cosine of a unit vector.
 *
 * # Safety
 * `x` must point to `d` doubles and `codes` to `levels` writable `u32`s.
 */
enum AkannStatus akann_assign_reference(const struct AkannConfig *cfg,
                                        const double *x,
                                        size_t d,
                                        uint32_t *codes,
                                        size_t levels,
                                        double *a_s);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void akann_config_free(struct AkannConfig *cfg);

/**
 * Copies `n × d` row-major floats. `metric`: 0 l2, 1 angular
 * (rows are normalised), 2 inner product.
 *
 * # Safety
 * `data` must point to `n·d` floats and `out` be valid for a write.
 */
enum AkannStatus akann_dataset_new(const float *data,
                                   size_t n,
                                   size_t d,
                                   uint32_t metric,
                                   struct AkannDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void akann_dataset_free(struct AkannDataset *ds);

/**
 * Builds a KS1 index over a copy of `ds` (which needs `levels == 1`).
 * `truncation == 0` keeps whole posting lists.
 *
 * # Safety
 * Handles must be live; `out` valid for a write.
 */
enum AkannStatus akann_ks1_build(const struct AkannDataset *ds,
                                 const struct AkannConfig *cfg,
                                 size_t truncation,
                                 struct AkannKs1Index **out);

/**
 * Top-`k` inner products. Writes up to `k` ids and scores and the count.
 *
 * # Safety
 * `q` must point to `d` floats; `ids` and `scores` to `k` writable slots.
 */
enum AkannStatus akann_ks1_query(const struct AkannKs1Index *idx,
                                 const float *q,
                                 size_t d,
                                 size_t k,
                                 size_t s0,
                                 size_t probe,
                                 uint32_t *ids,
                                 float *scores,
                                 size_t *found);

/**
 * # Safety
 * `idx` must be live and `path` NUL-terminated.
 */
enum AkannStatus akann_ks1_save(const struct AkannKs1Index *idx, const char *path);

/**
 * Loads an index file over a copy of `ds` (the vectors it was built on).
 *
 * # Safety
 * `path` NUL-terminated, `ds` live, `out` valid for a write.
 */
enum AkannStatus akann_ks1_load(const char *path,
                                const struct AkannDataset *ds,
                                struct AkannKs1Index **out);

/**
 * # Safety
 * `idx` must be null or a handle not yet freed.
 */
void akann_ks1_free(struct AkannKs1Index *idx);

/**
 * Builds an HNSW graph over a copy of `ds`.
 *
 * # Safety
 * `ds` live, `out` valid for a write.
 */
enum AkannStatus akann_graph_build(const struct AkannDataset *ds,
                                   size_t m,
                                   size_t efc,
                                   uint64_t seed,
                                   struct AkannGraph **out);

/**
 * Attaches KS2 edge metadata using `cfg` (which needs `m == 256`) and a
 * rotation drawn from `rotation_seed`.
 *
 * # Safety
 * Handles must be live.
 */
enum AkannStatus akann_graph_attach_ks2(struct AkannGraph *g,
                                        const struct AkannConfig *cfg,
                                        uint64_t rotation_seed,
                                        bool quantize);

/**
 * `k` nearest neighbours by squared ℓ2 distance. With `use_ks2` the
 * graph must carry KS2 metadata. `evals` receives the exact distance count.
 *
 * # Safety
 * `q` must point to `d` floats; `ids` and `dists` to `k` writable slots.
 */
enum AkannStatus akann_graph_search(const struct AkannGraph *g,
                                    const float *q,
                                    size_t d,
                                    size_t k,
                                    size_t efs,
                                    bool use_ks2,
                                    uint32_t *ids,
                                    float *dists,
                                    size_t *found,
                                    uint64_t *evals);

/**
 * # Safety
 * `g` must be live and `path` NUL-terminated.
 */
enum AkannStatus akann_graph_save(const struct AkannGraph *g, const char *path);

/**
 * Loads a graph file over a copy of `ds`.
 *
 * # Safety
 * `path` NUL-terminated, `ds` live, `out` valid for a write.
 */
enum AkannStatus akann_graph_load(const char *path,
                                  const struct AkannDataset *ds,
                                  struct AkannGraph **out);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void akann_graph_free(struct AkannGraph *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AKANN_H */
