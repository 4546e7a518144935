/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef STAR_ASQP_H
#define STAR_ASQP_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum StarStatus {
  STAR_STATUS_OK = 0,
  STAR_STATUS_NULL_POINTER = 1,
  STAR_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON, unknown order, bad parameter.
  STAR_STATUS_INVALID_ARGUMENT = 3,
  // Well-formed request the library refused (empty loss group, id
  // mismatch, too many views...).
  STAR_STATUS_REJECTED = 4,
  STAR_STATUS_PANIC = 5,
} StarStatus;

// Decoding schema handle.
typedef struct StarSchema StarSchema;

// Vote accumulator for one sentence.
typedef struct StarVote StarVote;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Description of the last failure on this thread, or NULL. The caller
// frees the copy with [`star_string_free`].
char *star_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void star_string_free(char *s);

// Library version; static, do not free.
const char *star_version(void);

// JSON array of the 24 quad orders, e.g. `["[A][C][O][S]", ...]`.
//
// # Safety
// `out` must be a valid pointer.
enum StarStatus star_quad_orders(char **out);

// Render a quad-prediction target from a JSON quad list
// (`[{"aspect", "category", "opinion", "polarity"}]`) and an order such as
// `"[A][C][O][S]"` or `"ACOS"`.
//
// # Safety
// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
enum StarStatus star_render_target(const char *quads_json, const char *order, char **out);

// Parse a generated target into a JSON quad list. Malformed segments are
// dropped; `n_malformed` (may be NULL) receives their count.
//
// # Safety
// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
enum StarStatus star_parse_target(const char *target,
                                  const char *order,
                                  char **out,
                                  size_t *n_malformed);

// Build a schema from newline-separated categories and the expected order.
//
// # Safety
// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
enum StarStatus star_schema_new(const char *categories,
                                const char *order,
                                bool strict_spans,
                                struct StarSchema **out);

// # Safety
// `schema` must be NULL or a handle from [`star_schema_new`], not yet freed.
void star_schema_free(struct StarSchema *schema);

// Validate `target` for `sentence`. `*valid` tells the verdict; when
// invalid, `*position` is the whitespace-token index of the first
// violation (the token count for a premature end).
//
// # Safety
// `schema` must be a live handle; other pointers valid.
enum StarStatus star_schema_validate(const struct StarSchema *schema,
                                     const char *sentence,
                                     const char *target,
                                     bool *valid,
                                     size_t *position);

// `tau <= 0` selects the default `k / 2`.
//
// # Safety
// `out` must be a valid pointer.
enum StarStatus star_vote_new(size_t k, double tau, struct StarVote **out);

// Add the generated sequence of one order as a view.
//
// # Safety
// `vote` must be a live handle; strings valid.
enum StarStatus star_vote_add_view(struct StarVote *vote, const char *order, const char *sequence);

// Accepted quads as a JSON list. Views not added count as empty.
//
// # Safety
// `vote` must be a live handle, `out` a valid pointer.
enum StarStatus star_vote_result(const struct StarVote *vote, char **out);

// # Safety
// `vote` must be NULL or a handle from [`star_vote_new`], not yet freed.
void star_vote_free(struct StarVote *vote);

// Balanced contribution loss: the sum of the three group means.
//
// # Safety
// Each array must hold at least its length in readable doubles.
enum StarStatus star_bcl(const double *quad,
                         size_t n_quad,
                         const double *pairwise,
                         size_t n_pairwise,
                         const double *overall,
                         size_t n_overall,
                         double *out);

// Mean over all instances regardless of task.
//
// # Safety
// Each array must hold at least its length in readable doubles.
enum StarStatus star_pooled_loss(const double *quad,
                                 size_t n_quad,
                                 const double *pairwise,
                                 size_t n_pairwise,
                                 const double *overall,
                                 size_t n_overall,
                                 double *out);

// Exact-match report JSON (`precision`, `recall`, `f1`, `tp`, `n_pred`,
// `n_gold`) from final predictions JSONL and canonical gold JSONL.
//
// # Safety
// String arguments must be valid NUL-terminated strings, `out` a valid pointer.
enum StarStatus star_eval(const char *predictions_jsonl, const char *gold_jsonl, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAR_ASQP_H */
