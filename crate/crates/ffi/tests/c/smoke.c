#include <math.h>
#include <stdio.h>

#include "omegascale.h"

static int fail(const char *what) {
    fprintf(stderr, "%s: %s\n", what, os_last_error());
    return 1;
}

int main(void) {
    OsModel *m = NULL;
    OsOmega *o = NULL;
    OsScaleTable *t = NULL;
    OsSolver *s = NULL;
    double w, z, wq, a;

    if (os_model_brownian(1.0, sqrt(2.0), &m) != OS_STATUS_OK) return fail("model");
    if (os_omega_constant(0.5, &o) != OS_STATUS_OK) return fail("omega");
    if (os_scale_table_build(m, o, 1.0, 0.01, &t) != OS_STATUS_OK) return fail("table");
    if (os_scale_table_eval(t, 0.5, &w, &z) != OS_STATUS_OK) return fail("eval");
    if (os_classical_scale(m, 0.5, 0.5, &wq, NULL) != OS_STATUS_OK) return fail("classical");
    if (fabs(w - wq) > 1e-8) return fail("table vs classical");
    if (os_solver_new(m, o, 1.0, 0.01, &s) != OS_STATUS_OK) return fail("solver");
    if (os_solver_exit(s, OS_EXIT_KIND_TWO_SIDED_UP, 0.5, 1.0, 0.0, &a, NULL) != OS_STATUS_OK) return fail("exit");
    if (os_solver_exit(s, OS_EXIT_KIND_TWO_SIDED_UP, 2.0, 1.0, 0.0, &a, NULL) != OS_STATUS_DOMAIN) return fail("ordering");

    printf("%.6f %.6f\n", w, z);
    os_solver_free(s);
    os_scale_table_free(t);
    os_omega_free(o);
    os_model_free(m);
    return 0;
}
