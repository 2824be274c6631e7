#ifndef CURATE_H
#define CURATE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CurateStatus {
  CURATE_STATUS_OK = 0,
  CURATE_STATUS_NULL_POINTER = 1,
  CURATE_STATUS_INVALID_UTF8 = 2,
  CURATE_STATUS_INVALID_ARGUMENT = 3,
  CURATE_STATUS_INTERNAL = 4,
} CurateStatus;

/**
 * Questionable-content scorer with default parameters and patterns.
 */
typedef struct CurateScorer CurateScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * on the same thread; never null.
 */
const char *curate_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void curate_string_free(char *s);

/**
 * Normalize a language code to the corpus convention.
 *
 * # Safety
 * `raw` must be a NUL-terminated string; `out` must be writable.
 */
enum CurateStatus curate_normalize_lang(const char *raw, char **out);

/**
 * chrF (character 6-grams, beta 2) on a 0-100 scale.
 *
 * # Safety
 * `hypothesis` and `reference` must be NUL-terminated; `out` writable.
 */
enum CurateStatus curate_chrf(const char *hypothesis, const char *reference, double *out);

/**
 * Normalized Levenshtein similarity between two token sequences.
 *
 * # Safety
 * `a` and `b` must point to `a_len` and `b_len` readable values (or be null
 * with length zero); `out` must be writable.
 */
enum CurateStatus curate_levenshtein_similarity(const uint32_t *a,
                                                uintptr_t a_len,
                                                const uint32_t *b,
                                                uintptr_t b_len,
                                                double *out);

/**
 * Remove spaces before virama signs for languages that need it.
 *
 * # Safety
 * `text` and `lang` must be NUL-terminated; `out` writable.
 */
enum CurateStatus curate_fix_virama(const char *text, const char *lang, char **out);

/**
 * Probability that Myanmar text is Zawgyi-encoded.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` writable.
 */
enum CurateStatus curate_zawgyi_probability(const char *text, double *out);

/**
 * UniMax weights. `counts_json` maps language to token count; the result is
 * a JSON object.
 *
 * # Safety
 * `counts_json` must be NUL-terminated; `out` writable.
 */
enum CurateStatus curate_unimax_weights(const char *counts_json,
                                        double budget,
                                        double max_epochs,
                                        char **out);

/**
 * # Safety
 * `out` must be writable. Release the handle with [`curate_scorer_free`].
 */
enum CurateStatus curate_scorer_new(struct CurateScorer **out);

/**
 * Score a document: fraction of questionable sentences, and whether the
 * clean gate keeps it (1) or drops it (0).
 *
 * # Safety
 * `scorer` must come from [`curate_scorer_new`]; strings NUL-terminated;
 * both out pointers writable.
 */
enum CurateStatus curate_scorer_score(const struct CurateScorer *scorer,
                                      const char *text,
                                      const char *lang,
                                      double *questionable_out,
                                      int32_t *keep_out);

/**
 * # Safety
 * `scorer` must come from [`curate_scorer_new`] (or be null) and not be
 * used afterwards.
 */
void curate_scorer_free(struct CurateScorer *scorer);

/**
 * Run the cleaning pipeline described by a config file and return the
 * per-stage reports as JSON.
 *
 * # Safety
 * `config_path` must be NUL-terminated; `reports_out` writable.
 */
enum CurateStatus curate_pipeline_run(const char *config_path, char **reports_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURATE_H */
