#include <math.h>
#include <stdio.h>
#include "mlrate.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (%s)\n", #cond, mlr_last_error()); return 1; } } while (0)

int main(void) {
    MlrConstellation *c = NULL;
    MlrCurve *curve = NULL;
    size_t n = 0, m = 0;
    double d_min = 0.0, d_max = 0.0, th = 0.0;
    MlrEstimate v;

    CHECK(mlr_constellation_builtin("qam", 16, &c) == MLR_STATUS_OK);
    CHECK(mlr_constellation_shape(c, &n, &m) == MLR_STATUS_OK && n == 2 && m == 16);
    CHECK(mlr_constellation_distances(c, 5, &d_min, &d_max) == MLR_STATUS_OK);
    CHECK(isfinite(d_max) && d_max > d_min);
    /* two-dimensional: convex in SNR everywhere, so only geometry thresholds */
    CHECK(mlr_classify_threshold(c, MLR_VARIABLE_SNR, "snr_convex_from", &th) == MLR_STATUS_UNSUPPORTED);
    CHECK(mlr_classify_threshold(c, MLR_VARIABLE_SNR, "d_min", &th) == MLR_STATUS_OK);
    CHECK(fabs(th - 1.0 / sqrt(10.0)) < 1e-12);
    CHECK(mlr_curve_closed_form("qpsk", 4, MLR_VARIABLE_SNR, &curve) == MLR_STATUS_OK);
    CHECK(mlr_curve_evaluate(curve, 10.0, &v, NULL, NULL) == MLR_STATUS_OK);
    CHECK(fabs(v.value - 0.025186697036433968) < 1e-14);
    CHECK(mlr_constellation_builtin(NULL, 2, &c) == MLR_STATUS_NULL_POINTER);
    mlr_curve_free(curve);
    mlr_constellation_free(c);
    printf("ok %s\n", mlr_version());
    return 0;
}
