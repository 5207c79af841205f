/* C interface for the ncca number-conserving cellular automata library. */

#ifndef NCCA_H
#define NCCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Conservation verdict written to `verdict_out` parameters.
 */
#define NCCA_VERDICT_CONSERVING 0

/**
 * See `NCCA_VERDICT_CONSERVING`.
 */
#define NCCA_VERDICT_VIOLATED 1

/**
 * Enumeration flag: restrict to rotation-symmetric rules (dimension 2).
 */
#define NCCA_ENUM_ROTATION_SYMMETRIC 1

/**
 * Enumeration flag: restrict to passive rules.
 */
#define NCCA_ENUM_PASSIVE 2

/**
 * Enumeration flag: keep only one-dimensional extensions.
 */
#define NCCA_ENUM_AXIS_EXTENSION_ONLY 4

/**
 * Oracle selector: exhaustive sweep of a torus.
 */
#define NCCA_ORACLE_EXHAUSTIVE 0

/**
 * Oracle selector: the finite-support configuration sweep.
 */
#define NCCA_ORACLE_FINITE_SUPPORT 1

/**
 * Oracle selector: seeded random sampling.
 */
#define NCCA_ORACLE_SAMPLED 2

/**
 * Status and error codes.
 */
typedef enum NccaStatus {
  /**
   * Success.
   */
  NCCA_OK = 0,
  /**
   * A required pointer argument was null.
   */
  NCCA_ERR_NULL_ARGUMENT = -1,
  /**
   * A string argument was not valid UTF-8.
   */
  NCCA_ERR_UTF8 = -2,
  /**
   * Malformed input (JSON or argument syntax).
   */
  NCCA_ERR_PARSE = -3,
  /**
   * Structurally valid but unusable input.
   */
  NCCA_ERR_INVALID = -4,
  /**
   * The requested sweep exceeds its budget or size bound.
   */
  NCCA_ERR_TOO_LARGE = -5,
  /**
   * The operation needs a number-conserving rule.
   */
  NCCA_ERR_NOT_CONSERVING = -6,
  /**
   * A parametric rule reconstructs values outside its state set.
   */
  NCCA_ERR_NOT_CLOSED = -7,
  /**
   * Internal panic; the message carries details.
   */
  NCCA_ERR_INTERNAL = -8,
} NccaStatus;

/**
 * Opaque rule handle.
 */
typedef struct NccaRule NccaRule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *ncca_version(void);

/**
 * Message for the most recent failure on this thread; valid until the next
 * failing call. Do not free.
 */
const char *ncca_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned through an out
 * parameter of this library, not yet freed.
 */
void ncca_string_free(char *s);

/**
 * Parses a rule file (dense or parametric JSON) into a handle.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum NccaStatus ncca_rule_parse(const char *json, struct NccaRule **out);

/**
 * Releases a rule handle.
 *
 * # Safety
 * `rule` must be null or an unfreed handle from this library.
 */
void ncca_rule_free(struct NccaRule *rule);

/**
 * Serializes the rule back to its JSON file form.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NccaStatus ncca_rule_to_json(const struct NccaRule *rule, char **out);

/**
 * Rule dimension, or -1 for a null handle.
 *
 * # Safety
 * `rule` must be null or a valid handle.
 */
int32_t ncca_rule_dimension(const struct NccaRule *rule);

/**
 * Decides number conservation. Writes a verdict value to `verdict_out`
 * and, when `report_out` is non-null, the JSON verdict
 * (`{"status", "witness", "equation"}`).
 *
 * # Safety
 * Pointers must be valid; `report_out` may be null.
 */
enum NccaStatus ncca_check(const struct NccaRule *rule, int32_t *verdict_out, char **report_out);

/**
 * Classifies a conserving rule; writes a JSON array of label strings.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NccaStatus ncca_classify(const struct NccaRule *rule, char **labels_out);

/**
 * Converts between representations: target 0 is dense, 1 is parametric
 * (center leading direction, canonical pair selection). Writes the
 * converted rule's JSON.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NccaStatus ncca_convert(const struct NccaRule *rule, int32_t target_kind, char **json_out);

/**
 * Enumerates all conserving rules for a dimension and state set; writes
 * the catalog as JSON lines (one rule per line plus a summary line).
 *
 * # Safety
 * `states` must point to `n_states` values; pointers must be valid.
 */
enum NccaStatus ncca_enumerate(uint32_t dim,
                               const int64_t *states,
                               size_t n_states,
                               uint32_t flags,
                               char **catalog_out);

/**
 * Runs a simulation oracle. `shape`/`n_dims` select the torus for the
 * exhaustive and sampled modes (ignored for finite support). Writes a
 * verdict value to `verdict_out` and, when `report_out` is non-null, the
 * JSON verdict with any witness configuration.
 *
 * # Safety
 * `shape` must point to `n_dims` values for the modes that read it;
 * pointers must be valid; `report_out` may be null.
 */
enum NccaStatus ncca_oracle(const struct NccaRule *rule,
                            int32_t mode,
                            const uint32_t *shape,
                            size_t n_dims,
                            uint64_t samples,
                            uint64_t seed,
                            uint64_t budget,
                            int32_t *verdict_out,
                            char **report_out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NCCA_H */
