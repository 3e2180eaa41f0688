#ifndef CHUNKCHAIN_H
#define CHUNKCHAIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_ARGUMENT = 1,
  CC_STATUS_INVALID_UTF8 = 2,
  CC_STATUS_INVALID_ARGUMENT = 3,
  CC_STATUS_NOT_FOUND = 4,
  CC_STATUS_REJECTED = 5,
  CC_STATUS_NO_CONVERGENCE = 6,
  CC_STATUS_PANIC = 99,
} CcStatus;

/**
 * A local chain with its mempool.
 */
typedef struct CcChain CcChain;

/**
 * A prerequisite graph under construction.
 */
typedef struct CcTopicGraph CcTopicGraph;

/**
 * Summary of one hypothesis test. `df_denominator` is NaN for t tests.
 */
typedef struct CcTestResult {
  double statistic;
  double df;
  double df_denominator;
  double p;
} CcTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cc_last_error(void);

/**
 * Library version as a static string.
 */
const char *cc_version(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void cc_string_free(char *s);

/**
 * Creates a chain holding only the genesis block for `classroom`.
 *
 * # Safety
 * `classroom` must be a NUL-terminated string and `out` writable.
 */
enum CcStatus cc_chain_new(const char *classroom, uint32_t difficulty, struct CcChain **out);

/**
 * Frees a chain. NULL is ignored.
 *
 * # Safety
 * `chain` must come from [`cc_chain_new`] and not be freed twice.
 */
void cc_chain_free(struct CcChain *chain);

/**
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum CcStatus cc_chain_tip_index(const struct CcChain *chain, uint64_t *out);

/**
 * Writes the tip digest as 64 lowercase hex characters.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum CcStatus cc_chain_tip_hash(const struct CcChain *chain, char **out);

/**
 * Writes the number of pending transactions.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum CcStatus cc_chain_mempool_len(const struct CcChain *chain, size_t *out);

/**
 * Adds a signed transaction (JSON) to the mempool. `out_added`, if not
 * NULL, receives false when the transaction was already known.
 *
 * # Safety
 * `chain` must be a live handle, `tx_json` a NUL-terminated string and
 * `out_added` NULL or writable.
 */
enum CcStatus cc_chain_add_transaction(struct CcChain *chain, const char *tx_json, bool *out_added);

/**
 * Mines pending transactions into a new tip block. `out_attempts`, if not
 * NULL, receives the number of hashes computed.
 *
 * # Safety
 * `chain` must be a live handle, `miner_nick` a NUL-terminated string and
 * `out_attempts` NULL or writable.
 */
enum CcStatus cc_chain_mine_block(struct CcChain *chain,
                                  const char *miner_nick,
                                  uint64_t timestamp,
                                  uint64_t *out_attempts);

/**
 * Writes block `index` as JSON.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum CcStatus cc_chain_block_json(const struct CcChain *chain, uint64_t index, char **out);

/**
 * Writes every block of the chain as a JSON array.
 *
 * # Safety
 * `chain` must be a live handle and `out` writable.
 */
enum CcStatus cc_chain_blocks_json(const struct CcChain *chain, char **out);

/**
 * Validates a JSON array of blocks starting at genesis. Returns
 * `CC_STATUS_REJECTED` with the failing block and rule in the last error.
 *
 * # Safety
 * `blocks_json` must be a NUL-terminated string.
 */
enum CcStatus cc_validate_blocks_json(const char *blocks_json);

/**
 * Signs a transaction and writes it as JSON. `kind` is 0 chat,
 * 1 achievement, 2 system; `secret_key` points to 32 bytes.
 *
 * # Safety
 * `author_nick` must be a NUL-terminated string, `payload` readable for
 * `payload_len` bytes, `secret_key` readable for 32 bytes and `out`
 * writable.
 */
enum CcStatus cc_transaction_sign(uint8_t kind,
                                  const char *author_nick,
                                  const uint8_t *payload,
                                  size_t payload_len,
                                  uint64_t timestamp,
                                  const uint8_t *secret_key,
                                  char **out);

/**
 * Checks id, limits and signature of a JSON transaction.
 *
 * # Safety
 * `tx_json` must be a NUL-terminated string and `out_valid` writable.
 */
enum CcStatus cc_transaction_verify(const char *tx_json, bool *out_valid);

/**
 * Hashes a JSON block header with `nonce`. Writes the 32-byte digest and
 * whether it meets the header's difficulty.
 *
 * # Safety
 * `header_json` must be a NUL-terminated string, `out_digest` writable for
 * 32 bytes and `out_meets` writable.
 */
enum CcStatus cc_try_nonce(const char *header_json,
                           uint64_t nonce,
                           uint8_t *out_digest,
                           bool *out_meets);

/**
 * # Safety
 * `out` must be writable.
 */
enum CcStatus cc_topic_graph_new(struct CcTopicGraph **out);

/**
 * Frees a topic graph. NULL is ignored.
 *
 * # Safety
 * `graph` must come from [`cc_topic_graph_new`] and not be freed twice.
 */
void cc_topic_graph_free(struct CcTopicGraph *graph);

/**
 * Records that `content` lists `prerequisite`.
 *
 * # Safety
 * `graph` must be a live handle and both labels NUL-terminated strings.
 */
enum CcStatus cc_topic_graph_add_edge(struct CcTopicGraph *graph,
                                      const char *content,
                                      const char *prerequisite);

/**
 * Runs HITS and writes `{scores: [{label, hub, authority}], iterations}`.
 * Pass 0 for `max_iter` to use the default limit.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum CcStatus cc_hits(const struct CcTopicGraph *graph, double tol, size_t max_iter, char **out);

/**
 * Pooled-variance two-sample t test.
 *
 * # Safety
 * `a` and `b` must be readable for `na` and `nb` doubles; `out` writable.
 */
enum CcStatus cc_two_sample_t(const double *a,
                              size_t na,
                              const double *b,
                              size_t nb,
                              struct CcTestResult *out);

/**
 * Pearson correlation t test on paired values.
 *
 * # Safety
 * `x` and `y` must be readable for `n` doubles; `out` writable.
 */
enum CcStatus cc_correlation_t(const double *x,
                               const double *y,
                               size_t n,
                               struct CcTestResult *out);

/**
 * ANCOVA over groups given as JSON
 * `[{"label": .., "covariate": [..], "response": [..]}, ..]`.
 *
 * # Safety
 * `groups_json` must be a NUL-terminated string and `out` writable.
 */
enum CcStatus cc_ancova(const char *groups_json, struct CcTestResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHUNKCHAIN_H */
