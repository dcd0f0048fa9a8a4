#include <stdio.h>
#include <string.h>

#include "cuopt.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      const char *msg = cuopt_last_error_message();                     \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,            \
              msg ? msg : "no error");                                  \
      return 1;                                                         \
    }                                                                   \
  } while (0)

static char *slurp(const char *path) {
  FILE *f = fopen(path, "rb");
  if (!f) return NULL;
  fseek(f, 0, SEEK_END);
  long n = ftell(f);
  fseek(f, 0, SEEK_SET);
  char *buf = malloc((size_t)n + 1);
  if (buf && fread(buf, 1, (size_t)n, f) != (size_t)n) {
    free(buf);
    buf = NULL;
  }
  if (buf) buf[n] = '\0';
  fclose(f);
  return buf;
}

int main(int argc, char **argv) {
  CHECK(argc == 2);
  char *json = slurp(argv[1]);
  CHECK(json != NULL);

  CuoptInstance *inst = NULL;
  CHECK(cuopt_instance_from_json(json, &inst) == CUOPT_STATUS_OK);
  free(json);
  CHECK(strcmp(cuopt_instance_kind(inst), "polyhedral_rhs") == 0);

  size_t periods = 0, dim = 0;
  CHECK(cuopt_instance_shape(inst, &periods, &dim) == CUOPT_STATUS_OK);
  double value = 0.0;
  CHECK(cuopt_counterpart_value(inst, &value) == CUOPT_STATUS_OK);
  printf("periods=%zu dim=%zu value=%.12f\n", periods, dim, value);

  char *text = NULL;
  CHECK(cuopt_reformulate(inst, false, &text) == CUOPT_STATUS_OK);
  CHECK(text[0] == '{');
  cuopt_string_free(text);
  cuopt_instance_free(inst);

  CuoptInstance *bad = NULL;
  CuoptStatus st = cuopt_instance_from_json("{", &bad);
  CHECK(st == CUOPT_STATUS_PARSE_ERROR || st == CUOPT_STATUS_INVALID_INSTANCE);
  CHECK(bad == NULL);
  CHECK(cuopt_last_error_message() != NULL);
  printf("error=%s\n", cuopt_status_name(st));

  const char *lp_text =
      "cuopt-lp 1\n"
      "objective max\n"
      "column x 0 4 1\n"
      "column y 0 4 2\n"
      "row r le 5 x=1 y=1\n"
      "end\n";
  CuoptLp *lp = NULL;
  CHECK(cuopt_lp_parse(lp_text, &lp) == CUOPT_STATUS_OK);
  CuoptLpSolution *sol = NULL;
  CHECK(cuopt_lp_solve(lp, &sol) == CUOPT_STATUS_OK);
  CuoptLpStatus lp_status;
  double obj = 0.0;
  CHECK(cuopt_lp_solution_status(sol, &lp_status, &obj) == CUOPT_STATUS_OK);
  CHECK(lp_status == CUOPT_LP_STATUS_OPTIMAL);
  double x[2];
  CHECK(cuopt_lp_solution_x(sol, x, 1) == CUOPT_STATUS_BUFFER_TOO_SMALL);
  CHECK(cuopt_lp_solution_x(sol, x, 2) == CUOPT_STATUS_OK);
  printf("lp=%.12f x=%.12f,%.12f\n", obj, x[0], x[1]);
  cuopt_lp_solution_free(sol);
  cuopt_lp_free(lp);
  return 0;
}
