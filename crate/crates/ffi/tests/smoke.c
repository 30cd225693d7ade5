#include <math.h>
#include <stdio.h>
#include "nfl.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        NflStatus s_ = (expr);                                             \
        if (s_ != NFL_STATUS_OK) {                                         \
            fprintf(stderr, "%s -> %d: %s\n", #expr, s_, nfl_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    NflKernel *k = NULL;
    NflNonlinearity *f = NULL;
    CHECK(nfl_kernel_gaussian(1.0, &k));
    CHECK(nfl_nonlinearity_kpp(1.0, &f));

    double c = 0.0;
    CHECK(nfl_kpp_speed(k, 1.0, 1.0, &c));
    if (fabs(c - exp(0.5)) > 1e-9) {
        fprintf(stderr, "kpp speed %g\n", c);
        return 1;
    }

    NflKernel *bad = NULL;
    if (nfl_kernel_gaussian(-2.0, &bad) != NFL_STATUS_INVALID_ARGUMENT || bad != NULL) {
        fprintf(stderr, "negative sigma accepted\n");
        return 1;
    }

    double vals[201];
    for (int i = 0; i < 201; i++) {
        double x = -10.0 + 0.1 * i;
        vals[i] = 0.5 * (1.0 - tanh(x));
    }
    NflField *u0 = NULL, *u1 = NULL;
    CHECK(nfl_field_new(-10.0, 0.1, vals, 201, 1.0, 0.0, &u0));
    CHECK(nfl_evolve(u0, f, k, 2.0, 0.05, &u1));
    double xm = 0.0, xp = 0.0;
    CHECK(nfl_interface_locations(u1, 0.5, &xm, &xp));
    printf("front at %.4f after t=2\n", xp);

    nfl_field_free(u1);
    nfl_field_free(u0);
    nfl_nonlinearity_free(f);
    nfl_kernel_free(k);
    return xp > 0.0 ? 0 : 1;
}
