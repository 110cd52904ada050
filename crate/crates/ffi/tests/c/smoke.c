#include <math.h>
#include <stdio.h>
#include <string.h>

#include "superhol.h"

#define CHECK(call)                                                       \
  do {                                                                    \
    SuperholStatus s_ = (call);                                           \
    if (s_ != SUPERHOL_STATUS_OK) {                                       \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,             \
              superhol_last_error());                                     \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(void) {
  SuperholGrassmann *a = NULL, *b = NULL, *ab = NULL;
  double re, im;
  CHECK(superhol_grassmann_new(2, &a));
  CHECK(superhol_grassmann_new(2, &b));
  CHECK(superhol_grassmann_set(a, 1, 1.0, 0.0));
  CHECK(superhol_grassmann_set(b, 2, 1.0, 0.0));
  CHECK(superhol_grassmann_mul(b, a, &ab));
  CHECK(superhol_grassmann_get(ab, 3, &re, &im));
  if (re != -1.0 || im != 0.0) return 2;
  if (superhol_grassmann_set(a, 4, 1.0, 0.0) != SUPERHOL_STATUS_RANGE) return 3;
  superhol_grassmann_free(a);
  superhol_grassmann_free(b);
  superhol_grassmann_free(ab);

  int64_t w[3] = {1, 2, -3};
  CHECK(superhol_point_character(w, 3, 0.7, 0.4, &re, &im));
  double want = cos(1.1) + cos(2.2) + cos(3.3);
  if (fabs(re - want) > 1e-12) return 4;

  SuperholScenario *sc = NULL;
  char *report = NULL;
  CHECK(superhol_scenario_resolve("point-u1-weights", &sc));
  CHECK(superhol_scenario_run(sc, NULL, &report));
  if (strstr(report, "\"passed\":true") == NULL) return 5;
  superhol_string_free(report);
  superhol_scenario_free(sc);

  if (superhol_scenario_from_json("{", &sc) != SUPERHOL_STATUS_SCHEMA) return 6;
  if (superhol_last_error() == NULL) return 7;
  printf("ok %s\n", superhol_version());
  return 0;
}
