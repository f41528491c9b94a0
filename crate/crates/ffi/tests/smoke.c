#include <math.h>
#include <stdio.h>
#include <string.h>

#include "synchrony.h"

int main(void) {
    double chi = 0, nu = 0;
    if (sy_theorem_constants(&chi, &nu) != SY_STATUS_OK) return 1;
    if (fabs(cos(chi) + 0.5 * cos(chi / 2) ) > 1e-12) return 2;

    double phases[3] = {0.3, 0.3, 0.3};
    double r = 0;
    if (sy_order_parameter(phases, 3, &r) != SY_STATUS_OK || fabs(r - 1) > 1e-12) return 3;

    SyStatus st = sy_order_parameter(NULL, 3, &r);
    if (st != SY_STATUS_NULL_POINTER) return 4;
    if (strcmp(sy_status_name(st), "null-pointer") != 0) return 5;
    if (sy_last_error_message() == NULL) return 6;

    SyEstimator *est = NULL;
    if (sy_estimator_new(1.0, &est) != SY_STATUS_OK) return 7;
    int ready = 0;
    double theta = 0;
    for (int k = 0; k < 400; k++) {
        double t = k * 0.01;
        if (sy_estimator_push(est, t, sin(4 * t), 0.01, &theta, &ready) != SY_STATUS_OK) return 8;
    }
    sy_estimator_free(est);
    if (!ready) return 9;

    printf("ok %s\n", sy_version());
    return 0;
}
