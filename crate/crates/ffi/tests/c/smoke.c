#include <math.h>
#include <stdio.h>
#include "ebcle.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,     \
              __LINE__, #cond);                                  \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 3) return 2;

  EbcleDataset *ds = NULL;
  CHECK(ebcle_dataset_load_mnist(argv[1], argv[2], &ds) == EBCLE_STATUS_OK);
  size_t n = 0, h = 0, w = 0, c = 0, k = 0;
  CHECK(ebcle_dataset_info(ds, &n, &h, &w, &c, &k) == EBCLE_STATUS_OK);
  CHECK(n == 1000 && h == 28 && w == 28 && c == 1 && k == 10);
  EbcleEntropySummary s;
  CHECK(ebcle_dataset_entropy(ds, EBCLE_CHANNEL_MODE_FLATTEN_ALL, &s) ==
        EBCLE_STATUS_OK);
  CHECK(s.mean_nats > 0.5 && s.mean_nats < 2.0);
  ebcle_dataset_free(ds);

  EbcleEstimate est;
  CHECK(ebcle_estimate(2.14, &est) == EBCLE_STATUS_OK);
  CHECK(est.n_upper == 2 && est.n_lower == 1);

  EbclePlan plan;
  CHECK(ebcle_plan(2.14, EBCLE_FAMILY_DENSENET, true, &plan) ==
        EBCLE_STATUS_OK);
  CHECK(plan.depth == 10);

  EbcleArchConfig cfg = {EBCLE_FAMILY_RESNET, 26, 24, 32, 32, 3, 10, 0, 0};
  uint64_t params = 0;
  CHECK(ebcle_count_params(&cfg, &params) == EBCLE_STATUS_OK);
  CHECK(params == 830698);

  double x[] = {148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236};
  EbcleShapiroWilk sw;
  CHECK(ebcle_shapiro_wilk(x, 11, &sw) == EBCLE_STATUS_OK);
  CHECK(fabs(sw.w_stat - 0.7888146948631716) < 1e-9);

  CHECK(ebcle_estimate(-1.0, &est) == EBCLE_STATUS_DOMAIN);
  char msg[256];
  size_t need = ebcle_last_error_message(msg, sizeof msg);
  CHECK(need > 1 && need <= sizeof msg);
  printf("ok: %s\n", msg);
  return 0;
}
