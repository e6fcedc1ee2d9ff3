#include <math.h>
#include <stdio.h>
#include <string.h>

#include "iwalk/iwalk.h"

static int fail(const char* what) {
  fprintf(stderr, "%s: %s\n", what, iwalk_last_error());
  return 1;
}

int main(void) {
  iwalk_truncation t = iwalk_truncation_default();
  iwalk_env* env = NULL;
  iwalk_env* bad = NULL;
  iwalk_report* rep = NULL;
  size_t n = 2;
  double p = 0.0;
  size_t i;

  t.sites = 8;
  if (iwalk_env_geometric(0.5, &t, &env) != IWALK_OK) return fail("geometric");
  if (iwalk_env_size(env) != 8) return fail("size");
  if (iwalk_run_exact(env, &n, 1, NULL, &rep) != IWALK_OK) return fail("exact");
  if (iwalk_report_artifact_count(rep) != 1) return fail("artifacts");
  if (strcmp(iwalk_report_artifact_name(rep, 0), "exact_n2.csv") != 0) return fail("name");
  for (i = 0; i < iwalk_report_scalar_count(rep); ++i) {
    if (iwalk_report_scalar_name(rep, i) == NULL) return fail("scalar");
  }
  iwalk_report_free(rep);

  if (iwalk_env_omega(env, 3, 2, &p) != IWALK_OK || fabs(p - 0.25) > 1e-15) return fail("omega");
  if (iwalk_env_geometric(2.0, &t, &bad) != IWALK_E_VALIDATION || bad != NULL) return fail("bad ratio accepted");
  iwalk_env_free(env);
  printf("C interface ok (%s)\n", iwalk_version());
  return 0;
}
