#include <stdio.h>
#include "srgof.h"

int main(void) {
    SrgofSample *x = NULL, *x0 = NULL, *y0 = NULL;
    if (srgof_sample_draw("gaussian:d=2,shift=0.8", 200, 1, &x) != SRGOF_STATUS_OK ||
        srgof_sample_draw("gaussian:d=2", 200, 2, &x0) != SRGOF_STATUS_OK ||
        srgof_sample_draw("gaussian:d=2", 100, 3, &y0) != SRGOF_STATUS_OK) {
        fprintf(stderr, "%s\n", srgof_last_error());
        return 1;
    }
    SrgofTestParams params;
    srgof_params_default(&params);
    params.method = "srpt";
    params.seed = 7;
    SrgofDecision d;
    SrgofStatus st = srgof_test(&params, x, x0, y0, &d);
    if (st == SRGOF_STATUS_OK) {
        printf("reject=%d statistic=%g\n", d.reject, d.statistic);
    } else {
        fprintf(stderr, "error %d: %s\n", (int)st, srgof_last_error());
    }
    srgof_sample_free(x);
    srgof_sample_free(x0);
    srgof_sample_free(y0);
    return st == SRGOF_STATUS_OK ? 0 : 1;
}
