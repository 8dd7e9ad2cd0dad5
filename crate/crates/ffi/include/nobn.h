#ifndef NOBN_H
#define NOBN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NobnStatus {
  NOBN_STATUS_OK = 0,
  NOBN_STATUS_NULL_ARGUMENT = 1,
  NOBN_STATUS_INVALID_UTF8 = 2,
  NOBN_STATUS_PARSE_ERROR = 3,
  NOBN_STATUS_INVALID_ARGUMENT = 4,
  /**
   * Free-node cap or state budget exceeded.
   */
  NOBN_STATUS_RESOURCE_LIMIT = 5,
  NOBN_STATUS_IMPOSSIBLE_EVIDENCE = 6,
  NOBN_STATUS_OUT_OF_RANGE = 7,
  NOBN_STATUS_PANIC = 8,
} NobnStatus;

typedef struct NobnEvidence NobnEvidence;

typedef struct NobnNetwork NobnNetwork;

typedef struct NobnSearchResult NobnSearchResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses NET text. On success `*out` owns a new network.
 */
enum NobnStatus nobn_network_parse(const char *text_ptr, struct NobnNetwork **out_net);

/**
 * Releases a network; null is ignored.
 */
void nobn_network_free(struct NobnNetwork *net);

/**
 * Number of nodes, or 0 for null.
 */
size_t nobn_network_node_count(const struct NobnNetwork *net);

enum NobnStatus nobn_network_max_level(const struct NobnNetwork *net, size_t *out_level);

/**
 * Id of the node called `name`.
 */
enum NobnStatus nobn_network_node_index(const struct NobnNetwork *net,
                                        const char *name,
                                        size_t *out_index);

/**
 * Canonical NET text. Release `*out` with [`nobn_string_free`].
 */
enum NobnStatus nobn_network_print(const struct NobnNetwork *net, char **out_text);

void nobn_string_free(char *s);

/**
 * Parses EVIDENCE text against `net`.
 */
enum NobnStatus nobn_evidence_parse(const struct NobnNetwork *net,
                                    const char *text_ptr,
                                    struct NobnEvidence **out_ev);

void nobn_evidence_free(struct NobnEvidence *ev);

/**
 * Every instantiation consistent with `ev` (null for no evidence) with
 * joint `>= epsilon`. `max_states` of 0 means unlimited.
 */
enum NobnStatus nobn_top_epsilon(const struct NobnNetwork *net,
                                 const struct NobnEvidence *ev,
                                 double epsilon,
                                 uint64_t max_states,
                                 struct NobnSearchResult **out_result);

void nobn_result_free(struct NobnSearchResult *r);

/**
 * Accumulated mass, or 0 for null.
 */
double nobn_result_mass(const struct NobnSearchResult *r);

uint64_t nobn_result_states_explored(const struct NobnSearchResult *r);

uint64_t nobn_result_accepted_count(const struct NobnSearchResult *r);

/**
 * Estimated `P(node present | evidence)`. Fails with
 * `IMPOSSIBLE_EVIDENCE` when nothing was accepted.
 */
enum NobnStatus nobn_result_posterior(const struct NobnSearchResult *r, size_t node, double *out_p);

/**
 * Brute-force inference over at most `cap` free nodes. `posteriors` may be
 * null; otherwise it must hold `posteriors_len` doubles, at least the node
 * count.
 */
enum NobnStatus nobn_exact_inference(const struct NobnNetwork *net,
                                     const struct NobnEvidence *ev,
                                     size_t cap,
                                     double *out_evidence_probability,
                                     double *posteriors,
                                     size_t posteriors_len);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *nobn_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *nobn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOBN_H */
