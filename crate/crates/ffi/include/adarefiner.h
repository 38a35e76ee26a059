#ifndef ADAREFINER_H
#define ADAREFINER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of actions; valid codes are `0..ADR_ACTION_COUNT`.
 */
#define ADR_ACTION_COUNT 17

/**
 * Number of achievements; valid indices are `0..ADR_ACHIEVEMENT_COUNT`.
 */
#define ADR_ACHIEVEMENT_COUNT 22

/**
 * Cells in the egocentric view (9 columns by 7 rows).
 */
#define ADR_VIEW_CELLS 63

typedef enum AdrStatus {
  ADR_STATUS_OK = 0,
  ADR_STATUS_NULL_POINTER = 1,
  ADR_STATUS_INVALID_ARGUMENT = 2,
  ADR_STATUS_EPISODE_DONE = 3,
  ADR_STATUS_IO = 4,
  ADR_STATUS_INCOMPATIBLE = 5,
  ADR_STATUS_PANIC = 6,
} AdrStatus;

/**
 * Opaque policy loaded from a checkpoint.
 */
typedef struct AdrPolicy AdrPolicy;

/**
 * Opaque simulator instance.
 */
typedef struct AdrWorld AdrWorld;

/**
 * Outcome of one environment step.
 */
typedef struct AdrStepResult {
  double reward;
  bool done;
  /**
   * Achievements unlocked by this step.
   */
  uint32_t new_unlocks;
  int32_t health_delta;
} AdrStepResult;

/**
 * Player health, food, drink and energy, each in `[0, 9]`.
 */
typedef struct AdrPlayerStatus {
  int32_t health;
  int32_t food;
  int32_t drink;
  int32_t energy;
} AdrPlayerStatus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes.
 */
size_t adr_last_error(char *buf, size_t len);

/**
 * Creates a world with default constants on a `size` x `size` map
 * (0 selects the default 64).
 */
enum AdrStatus adr_world_new(uint64_t seed, uint32_t size, struct AdrWorld **out);

/**
 * Releases a world. Null is ignored.
 */
void adr_world_free(struct AdrWorld *world);

enum AdrStatus adr_world_reset(struct AdrWorld *world, uint64_t seed);

enum AdrStatus adr_world_step(struct AdrWorld *world, uint32_t action, struct AdrStepResult *out);

enum AdrStatus adr_world_feasible(const struct AdrWorld *world, uint32_t action, bool *out);

enum AdrStatus adr_world_status(const struct AdrWorld *world, struct AdrPlayerStatus *out);

/**
 * Bit `i` is set when achievement `i` (alphabetical order) is unlocked.
 */
enum AdrStatus adr_world_unlocked(const struct AdrWorld *world, uint32_t *out_mask);

enum AdrStatus adr_world_done(const struct AdrWorld *world, bool *out);

/**
 * Writes the 9x7 view row by row into `cells` (length `ADR_VIEW_CELLS`).
 * Each byte is a cell code (`0..14`, 255 for off-map) and each entity byte
 * is an entity code (`0..4`, 255 for none).
 */
enum AdrStatus adr_world_view(const struct AdrWorld *world, uint8_t *cells, uint8_t *entities);

/**
 * Geometric-mean score over `n` (= 22) success rates given in percent.
 */
enum AdrStatus adr_crafter_score(const double *rates, size_t n, double *out);

/**
 * Prerequisite depth of achievement `index` in the tech tree (1 to 8).
 */
enum AdrStatus adr_achievement_depth(uint32_t index, uint32_t *out);

/**
 * Comprehension score between two texts under the hashed embedding of
 * dimension `dim`. With `binary`, the result is 1 when the cosine exceeds
 * 0.5 and 0 otherwise.
 */
enum AdrStatus adr_text_score(const char *goals,
                              const char *trajectory,
                              size_t dim,
                              bool binary,
                              double *out);

enum AdrStatus adr_policy_load(const char *path, struct AdrPolicy **out);

/**
 * Releases a policy. Null is ignored.
 */
void adr_policy_free(struct AdrPolicy *policy);

/**
 * Length of the feature vector the policy expects.
 */
enum AdrStatus adr_policy_input_dim(const struct AdrPolicy *policy, size_t *out);

/**
 * Action probabilities (`ADR_ACTION_COUNT` entries) and state value for a
 * raw feature vector.
 */
enum AdrStatus adr_policy_evaluate(const struct AdrPolicy *policy,
                                   const float *features,
                                   size_t len,
                                   double *out_probs,
                                   double *out_value);

/**
 * Most likely action for the world's current observation, conditioned on
 * `goals` (sub-goals joined with "; "; null or empty means no goals).
 */
enum AdrStatus adr_policy_act_greedy(const struct AdrPolicy *policy,
                                     const struct AdrWorld *world,
                                     const char *goals,
                                     uint32_t *out_action);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADAREFINER_H */
