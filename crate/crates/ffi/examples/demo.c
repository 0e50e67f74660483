/* cc -I crates/ffi/include crates/ffi/examples/demo.c target/release/libreclab_ffi.a -lm -lpthread -ldl -o demo */
#include <stdio.h>
#include <string.h>
#include "reclab.h"

static int check(ReclabStatus s, const char *what) {
    if (s != RECLAB_STATUS_OK) {
        fprintf(stderr, "%s: status %d: %s\n", what, (int)s, reclab_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    ReclabSystem *sys = NULL;
    if (check(reclab_system_new("doubling", &sys), "system")) return 1;

    ReclabOrbit *orbit = NULL;
    if (check(reclab_orbit_new(sys, "1/3", "exact_modular", 0, 4, &orbit), "orbit")) return 1;
    double x[1];
    int32_t done = 0;
    while (reclab_orbit_next(orbit, x, 1, &done) == RECLAB_STATUS_OK && !done)
        printf("%.17g\n", x[0]);
    reclab_orbit_free(orbit);

    double c[1] = {0.5}, r[1] = {0.1}, l = 0.0;
    if (check(reclab_scale_to_measure(sys, c, r, 1, 0.1, &l), "scale")) return 1;
    printf("l = %.6f\n", l);
    /* unreachable target: an error code plus a message, never a crash */
    if (reclab_scale_to_measure(sys, c, r, 1, 2.0, &l) == RECLAB_STATUS_UNREACHABLE_TARGET)
        printf("unreachable: %s\n", reclab_last_error_message());
    reclab_system_free(sys);

    char *report = NULL;
    int32_t passed = 0;
    const char *cfg = "{\"system\": \"doubling\", \"n\": 100000, \"ensemble\": 10, \"seed\": 1,"
                      " \"schedule\": {\"family\": \"power_law\", \"exponents\": [0.5], \"scales\": [1]}}";
    if (check(reclab_run_experiment(cfg, &report, &passed), "experiment")) return 1;
    printf("experiment passed = %d, report is %zu bytes\n", passed, strlen(report));
    reclab_string_free(report);
    return 0;
}
