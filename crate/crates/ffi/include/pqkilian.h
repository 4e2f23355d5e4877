#ifndef PQKILIAN_H
#define PQKILIAN_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PqkStatus {
  PQK_STATUS_OK = 0,
  PQK_STATUS_NULL_POINTER = 1,
  PQK_STATUS_INVALID_ARGUMENT = 2,
  PQK_STATUS_UTF8 = 3,
  PQK_STATUS_PARSE = 4,
  PQK_STATUS_NOT_A_WITNESS = 5,
  PQK_STATUS_PROTOCOL = 6,
  PQK_STATUS_COMMITMENT = 7,
  PQK_STATUS_EXPERIMENT = 8,
  /**
   * The session is finished or poisoned.
   */
  PQK_STATUS_BAD_STATE = 9,
  PQK_STATUS_PANIC = 10,
} PqkStatus;

typedef enum PqkFamily {
  PQK_FAMILY_SHA256 = 1,
  /**
   * Insecure; for demonstrating collisions only.
   */
  PQK_FAMILY_TOY = 2,
} PqkFamily;

typedef struct PqkProver PqkProver;

typedef struct PqkStatement PqkStatement;

typedef struct PqkTranscript PqkTranscript;

typedef struct PqkVcCommitment PqkVcCommitment;

typedef struct PqkVcKey PqkVcKey;

typedef struct PqkVerifier PqkVerifier;

/**
 * Library-owned byte buffer.
 */
typedef struct PqkBytes {
  uint8_t *data;
  size_t len;
} PqkBytes;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full length including the NUL.
 */
size_t pqk_last_error(char *buf, size_t cap);

void pqk_bytes_free(struct PqkBytes b);

void pqk_string_free(char *s);

/**
 * Builds a statement from a CSP instance in JSON form. `pcp_k` is the
 * number of constraints read per challenge.
 */
enum PqkStatus pqk_statement_new(const char *instance_json,
                                 size_t pcp_k,
                                 uint32_t fam,
                                 uint16_t lambda,
                                 struct PqkStatement **out_statement);

void pqk_statement_free(struct PqkStatement *st);

/**
 * Length of the PCP string and of the full encoded proof in bytes.
 */
enum PqkStatus pqk_statement_sizes(const struct PqkStatement *st,
                                   size_t *out_proof_len,
                                   size_t *out_proof_bytes);

/**
 * Honest run of both parties with verifier randomness from `seed`.
 */
enum PqkStatus pqk_prove(const struct PqkStatement *st,
                         const uint32_t *witness,
                         size_t witness_len,
                         uint64_t seed,
                         struct PqkTranscript **out_transcript,
                         bool *out_accepted);

enum PqkStatus pqk_verify(const struct PqkStatement *st,
                          const struct PqkTranscript *t,
                          bool *out_accepted);

enum PqkStatus pqk_transcript_from_bytes(const uint8_t *data,
                                         size_t len,
                                         struct PqkTranscript **out_transcript);

/**
 * Wire encoding: the four frames back to back.
 */
enum PqkStatus pqk_transcript_to_bytes(const struct PqkTranscript *t, struct PqkBytes *out_bytes);

enum PqkStatus pqk_transcript_to_json(const struct PqkTranscript *t, char **out_json);

void pqk_transcript_free(struct PqkTranscript *t);

/**
 * Prover side of a step-wise run. Fails with `NOT_A_WITNESS` up front.
 */
enum PqkStatus pqk_prover_new(const struct PqkStatement *st,
                              const uint32_t *witness,
                              size_t witness_len,
                              struct PqkProver **out_prover);

/**
 * Feeds one verifier frame (key or challenge) and returns the reply frame.
 */
enum PqkStatus pqk_prover_handle(struct PqkProver *p,
                                 const uint8_t *frame,
                                 size_t frame_len,
                                 struct PqkBytes *out_frame);

void pqk_prover_free(struct PqkProver *p);

/**
 * Verifier side of a step-wise run; its coins come from `seed`.
 */
enum PqkStatus pqk_verifier_new(const struct PqkStatement *st,
                                uint64_t seed,
                                struct PqkVerifier **out_verifier);

/**
 * The opening key frame. Available once.
 */
enum PqkStatus pqk_verifier_start(struct PqkVerifier *v, struct PqkBytes *out_frame);

/**
 * Feeds one prover frame. After a commitment `out_frame` holds the
 * challenge; after the response it is empty and `out_done` is set.
 */
enum PqkStatus pqk_verifier_handle(struct PqkVerifier *v,
                                   const uint8_t *frame,
                                   size_t frame_len,
                                   struct PqkBytes *out_frame,
                                   bool *out_done);

/**
 * Verdict of a finished run.
 */
enum PqkStatus pqk_verifier_verdict(const struct PqkVerifier *v, bool *out_accepted);

/**
 * Transcript of a finished run; the caller owns the result.
 */
enum PqkStatus pqk_verifier_transcript(const struct PqkVerifier *v,
                                       struct PqkTranscript **out_transcript);

void pqk_verifier_free(struct PqkVerifier *v);

/**
 * Samples a commitment key for vectors of length `len`.
 */
enum PqkStatus pqk_vc_key_new(uint32_t fam,
                              uint16_t lambda,
                              size_t len,
                              uint64_t seed,
                              struct PqkVcKey **out_key);

void pqk_vc_key_free(struct PqkVcKey *k);

/**
 * Commits to `len` symbols given as integers.
 */
enum PqkStatus pqk_vc_commit(const struct PqkVcKey *k,
                             const uint64_t *values,
                             size_t len,
                             struct PqkVcCommitment **out_commitment);

enum PqkStatus pqk_vc_root(const struct PqkVcCommitment *c, struct PqkBytes *out_root);

/**
 * Opening proof for the positions in `queries`, serialized.
 */
enum PqkStatus pqk_vc_open(const struct PqkVcKey *k,
                           const struct PqkVcCommitment *c,
                           const size_t *queries,
                           size_t nqueries,
                           struct PqkBytes *out_proof);

/**
 * Checks an opening. Malformed roots or proofs give `false`, not an error.
 */
enum PqkStatus pqk_vc_verify(const struct PqkVcKey *k,
                             const uint8_t *root,
                             size_t root_len,
                             const size_t *queries,
                             const uint64_t *values,
                             size_t nqueries,
                             const uint8_t *proof,
                             size_t proof_len,
                             bool *out_valid);

void pqk_vc_commitment_free(struct PqkVcCommitment *c);

/**
 * Runs a named experiment. `config_json` and `seeds` (`"a..b"`) may be
 * null; `jobs == 0` uses every core. The report is returned as JSON.
 */
enum PqkStatus pqk_run_scenario(const char *name,
                                const char *config_json,
                                const char *seeds,
                                size_t jobs,
                                char **out_report_json,
                                bool *out_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PQKILIAN_H */
