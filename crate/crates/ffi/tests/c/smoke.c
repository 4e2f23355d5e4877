#include <stdio.h>
#include <string.h>
#include "pqkilian.h"

#define CHECK(expr)                                                        \
  do {                                                                     \
    PqkStatus s_ = (expr);                                                 \
    if (s_ != PQK_STATUS_OK) {                                             \
      char msg[256];                                                       \
      pqk_last_error(msg, sizeof msg);                                     \
      fprintf(stderr, "%s:%d: status %d: %s\n", __FILE__, __LINE__, s_, msg); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

/* argv[1]: instance JSON, argv[2..]: witness colors. */
int main(int argc, char **argv) {
  if (argc < 3) return 2;
  uint32_t w[64];
  size_t n = 0;
  for (int i = 2; i < argc && n < 64; i++) w[n++] = (uint32_t)strtoul(argv[i], NULL, 10);

  PqkStatement *st = NULL;
  CHECK(pqk_statement_new(argv[1], 8, PQK_FAMILY_SHA256, 128, &st));

  PqkVerifier *v = NULL;
  PqkProver *p = NULL;
  CHECK(pqk_verifier_new(st, 42, &v));
  CHECK(pqk_prover_new(st, w, n, &p));

  PqkBytes key, cm, r, z, end;
  bool done = false, ok = false;
  CHECK(pqk_verifier_start(v, &key));
  CHECK(pqk_prover_handle(p, key.data, key.len, &cm));
  CHECK(pqk_verifier_handle(v, cm.data, cm.len, &r, &done));
  CHECK(pqk_prover_handle(p, r.data, r.len, &z));
  CHECK(pqk_verifier_handle(v, z.data, z.len, &end, &done));
  CHECK(pqk_verifier_verdict(v, &ok));
  printf("done=%d accepted=%d bytes=%zu\n", done, ok, key.len + cm.len + r.len + z.len);

  PqkTranscript *t = NULL;
  bool ok2 = false;
  CHECK(pqk_verifier_transcript(v, &t));
  CHECK(pqk_verify(st, t, &ok2));

  PqkStatus bad = pqk_vc_key_new(7, 128, 4, 0, NULL);
  char msg[128];
  pqk_last_error(msg, sizeof msg);
  printf("bad family -> %d (%s)\n", bad, msg);

  pqk_bytes_free(key);
  pqk_bytes_free(cm);
  pqk_bytes_free(r);
  pqk_bytes_free(z);
  pqk_bytes_free(end);
  pqk_transcript_free(t);
  pqk_prover_free(p);
  pqk_verifier_free(v);
  pqk_statement_free(st);
  return (done && ok && ok2 && bad == PQK_STATUS_INVALID_ARGUMENT) ? 0 : 1;
}
