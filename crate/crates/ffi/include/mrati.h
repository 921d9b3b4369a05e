#ifndef MRATI_H
#define MRATI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MratiStatus {
  MRATI_STATUS_OK = 0,
  MRATI_STATUS_NULL_ARGUMENT = 1,
  MRATI_STATUS_INVALID_UTF8 = 2,
  MRATI_STATUS_PARSE = 3,
  MRATI_STATUS_NO_MODEL = 4,
  MRATI_STATUS_NO_PLAN = 5,
  MRATI_STATUS_FAILED = 6,
  MRATI_STATUS_PANIC = 7,
} MratiStatus;

typedef enum MratiMode {
  MRATI_MODE_ATI = 0,
  MRATI_MODE_TP = 1,
} MratiMode;

/**
 * A parsed and grounded domain.
 */
typedef struct MratiDomain MratiDomain;

/**
 * A plan as rendered action terms.
 */
typedef struct MratiPlan MratiPlan;

/**
 * The outcome of one scenario trial.
 */
typedef struct MratiRun MratiRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *mrati_last_error(void);

/**
 * Parses and grounds a domain description.
 *
 * # Safety
 * `source` must be a nul-terminated string and `out` a valid pointer.
 */
enum MratiStatus mrati_domain_parse(const char *source, struct MratiDomain **out);

/**
 * # Safety
 * `domain` must come from [`mrati_domain_parse`] and not be used afterwards. Null is ignored.
 */
void mrati_domain_free(struct MratiDomain *domain);

/**
 * Shortest plan from the state that `init` and the defaults determine.
 *
 * # Safety
 * `domain` must be a live handle, `init` and `goal` nul-terminated strings, `out` a valid pointer.
 */
enum MratiStatus mrati_plan(const struct MratiDomain *domain,
                            const char *init,
                            const char *goal,
                            size_t horizon,
                            struct MratiPlan **out);

/**
 * # Safety
 * `plan` must be a live handle or null.
 */
size_t mrati_plan_len(const struct MratiPlan *plan);

/**
 * Action `index` of the plan, or null when out of range. Owned by the plan.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
const char *mrati_plan_step(const struct MratiPlan *plan, size_t index);

/**
 * # Safety
 * `plan` must come from [`mrati_plan`] and not be used afterwards. Null is ignored.
 */
void mrati_plan_free(struct MratiPlan *plan);

/**
 * Runs one sampled trial of a robot-assistant scenario (1 to 5) at coarse resolution.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MratiStatus mrati_run_scenario(uint32_t scenario,
                                    enum MratiMode mode,
                                    uint64_t seed,
                                    struct MratiRun **out);

/**
 * # Safety
 * `run` must be a live handle or null.
 */
bool mrati_run_goal_achieved(const struct MratiRun *run);

/**
 * # Safety
 * `run` must be a live handle or null.
 */
size_t mrati_run_actions(const struct MratiRun *run);

/**
 * Event trace, one event per line. Owned by the run.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
const char *mrati_run_trace(const struct MratiRun *run);

/**
 * One-line outcome summary. Owned by the run.
 *
 * # Safety
 * `run` must be a live handle or null.
 */
const char *mrati_run_summary(const struct MratiRun *run);

/**
 * # Safety
 * `run` must come from [`mrati_run_scenario`] and not be used afterwards. Null is ignored.
 */
void mrati_run_free(struct MratiRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRATI_H */
