/* Builds against include/liegeo.h and the static library:
 *   cargo build -p liegeo-ffi --release
 *   cc -I crates/ffi/include crates/ffi/c/smoke.c target/release/libliegeo_ffi.a -lm -lpthread -ldl -o smoke
 */
#include <stdio.h>
#include "liegeo.h"

static int check(LgStatus s, const char *what) {
    if (s != LG_STATUS_OK) {
        fprintf(stderr, "%s: [%s] %s\n", what, lg_last_error_code(), lg_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    LgCauchyData *data = NULL;
    LgJetSolution *sol = NULL;
    double max = 0.0, x[8];
    if (check(lg_cauchy_data_random(1, 6, &data), "data")) return 1;
    if (check(lg_cauchy_solve(data, &sol), "solve")) return 1;
    if (check(lg_jet_solution_verify(sol, &max), "verify")) return 1;
    if (check(lg_jet_solution_scalars_at(sol, 0.01, -0.02, x), "eval")) return 1;
    printf("liegeo %s: verification max %.3e, a = %.6f, b = %.6f\n", lg_version(), max, x[0], x[1]);
    lg_jet_solution_free(sol);
    lg_cauchy_data_free(data);

    LgSurface *s = NULL;
    LgAnalysis *an = NULL;
    const char *torus =
        "{\"surface\": \"torus\", \"big_radius\": 2, \"radius\": 0.5, "
        "\"window\": [0.1, 0.6, 0.1, 0.6], \"nu\": 12, \"nv\": 12}";
    if (check(lg_surface_from_json(torus, &s), "surface")) return 1;
    LgStatus st = lg_surface_analyze(s, 2, &an);
    printf("torus: status %d, %s\n", (int)st, lg_last_error_code());
    lg_surface_free(s);
    return max < 1e-10 && st == LG_STATUS_NUMERICAL_FAILURE ? 0 : 1;
}
