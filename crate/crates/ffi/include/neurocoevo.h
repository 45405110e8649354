#ifndef NEUROCOEVO_H
#define NEUROCOEVO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_POINTER = 1,
  NC_STATUS_INVALID_UTF8 = 2,
  NC_STATUS_PARSE_ERROR = 3,
  NC_STATUS_ARITY_MISMATCH = 4,
  NC_STATUS_INVALID_GENOME = 5,
  NC_STATUS_EMPTY_MORPHOLOGY = 6,
  NC_STATUS_DOMAIN_MISMATCH = 7,
  NC_STATUS_NUMERICAL_BLOWUP = 8,
  NC_STATUS_INVALID_ARGUMENT = 9,
  NC_STATUS_PANIC = 10,
} NcStatus;

typedef enum {
  NC_AGGREGATION_AM = 0,
  NC_AGGREGATION_WM = 1,
  NC_AGGREGATION_GM = 2,
  NC_AGGREGATION_HM = 3,
} NcAggregation;

/**
 * Phase offsets for the contractile voxels of one morphology.
 */
typedef struct NcController NcController;

/**
 * A CPPN genome.
 */
typedef struct NcGenome NcGenome;

/**
 * A decoded, connected voxel body.
 */
typedef struct NcMorphology NcMorphology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nc_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. The pointer stays valid until the next call into the
 * library from this thread.
 */
const char *nc_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void nc_string_free(char *s);

/**
 * Parses a genome from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
NcStatus nc_genome_from_json(const char *json, NcGenome **out);

/**
 * # Safety
 * `genome` must be a live handle; `out` must be writable.
 */
NcStatus nc_genome_to_json(const NcGenome *genome, char **out);

/**
 * # Safety
 * `genome` must be NULL or a handle not yet freed.
 */
void nc_genome_free(NcGenome *genome);

/**
 * Evaluates the genome once. `inputs` holds `num_inputs` values and
 * `outputs` receives `num_outputs`; both counts must match the genome.
 *
 * # Safety
 * The arrays must hold at least the stated number of elements.
 */
NcStatus nc_feed_forward(const NcGenome *genome,
                         const double *inputs,
                         size_t num_inputs,
                         double *outputs,
                         size_t num_outputs);

/**
 * Decodes a SAM genome over an `nx` x `ny` x `nz` canvas, optionally
 * forcing the passive shell, and keeps the part connected to the anchored
 * face.
 *
 * # Safety
 * `genome` must be a live handle; `out` must be writable.
 */
NcStatus nc_morphology_decode(const NcGenome *genome,
                              size_t nx,
                              size_t ny,
                              size_t nz,
                              bool enclosure,
                              NcMorphology **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
NcStatus nc_morphology_from_json(const char *json, NcMorphology **out);

/**
 * # Safety
 * `morph` must be a live handle; `out` must be writable.
 */
NcStatus nc_morphology_to_json(const NcMorphology *morph, char **out);

/**
 * Present voxels, or 0 for a NULL handle.
 *
 * # Safety
 * `morph` must be NULL or a live handle.
 */
size_t nc_morphology_voxel_count(const NcMorphology *morph);

/**
 * # Safety
 * `morph` must be NULL or a live handle.
 */
size_t nc_morphology_contractile_count(const NcMorphology *morph);

/**
 * # Safety
 * `morph` must be NULL or a handle not yet freed.
 */
void nc_morphology_free(NcMorphology *morph);

/**
 * Decodes a controller genome into one phase per contractile voxel of
 * `morph`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
NcStatus nc_controller_decode(const NcGenome *genome,
                              const NcMorphology *morph,
                              NcController **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
NcStatus nc_controller_from_json(const char *json, NcController **out);

/**
 * # Safety
 * `ctrl` must be a live handle; `out` must be writable.
 */
NcStatus nc_controller_to_json(const NcController *ctrl, char **out);

/**
 * # Safety
 * `ctrl` must be NULL or a live handle.
 */
size_t nc_controller_len(const NcController *ctrl);

/**
 * # Safety
 * `ctrl` must be NULL or a handle not yet freed.
 */
void nc_controller_free(NcController *ctrl);

/**
 * Simulates the pair and writes the yz displacement of the free end.
 * `params_json` holds `{material, actuation, sim}` settings; NULL uses the
 * defaults.
 *
 * # Safety
 * Handles must be live, `params_json` NULL or NUL-terminated, `out_delta`
 * writable.
 */
NcStatus nc_simulate_displacement(const NcMorphology *morph,
                                  const NcController *ctrl,
                                  const char *params_json,
                                  double *out_delta);

/**
 * Aggregates `len` displacements into one aptitude.
 *
 * # Safety
 * `deltas` must hold `len` values; `out` must be writable.
 */
NcStatus nc_aggregate(NcAggregation kind, const double *deltas, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROCOEVO_H */
