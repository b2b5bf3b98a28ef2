#include <stdio.h>
#include <stdlib.h>
#include "tsgbm.h"

static void *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long len = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc((size_t)len + 1);
    size_t got = fread(buf, 1, (size_t)len, f);
    buf[got] = '\0';
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc != 2) return 64;

    double ce, cg;
    if (tsgbm_weibull_crlb(2.0, 2.0, 10000, &ce, &cg) != TSGBM_STATUS_OK) return 1;
    printf("crlb %.17g %.17g\n", ce, cg);

    if (tsgbm_weibull_crlb(-1.0, 2.0, 10000, &ce, &cg) != TSGBM_STATUS_DOMAIN) return 2;
    printf("domain_error %s\n", tsgbm_last_error());

    printf("seed %llu\n", (unsigned long long)tsgbm_derive_substream_seed(7, "train_sim", 3));

    double theta[1] = {0.3};
    double y[400];
    if (tsgbm_simulate("state_space_1p", true, theta, 1, 11, y, 400) != TSGBM_STATUS_OK) return 3;
    printf("y0 %.17g\n", y[0]);

    char *json = slurp(argv[1]);
    if (!json) return 4;
    TsgbmEstimator *est = NULL;
    if (tsgbm_estimator_from_json(json, &est) != TSGBM_STATUS_OK) return 5;
    free(json);

    size_t d = tsgbm_estimator_dims(est);
    double small[1];
    if (d > 0 && tsgbm_estimator_estimate(est, y, 400, small, 0) != TSGBM_STATUS_BUFFER_TOO_SMALL)
        return 6;
    double out[8];
    if (tsgbm_estimator_estimate(est, y, 400, out, 8) != TSGBM_STATUS_OK) return 7;
    printf("estimate %.17g\n", out[0]);

    char *back = NULL;
    if (tsgbm_estimator_to_json(est, &back) != TSGBM_STATUS_OK) return 8;
    TsgbmEstimator *again = NULL;
    if (tsgbm_estimator_from_json(back, &again) != TSGBM_STATUS_OK) return 9;
    tsgbm_string_free(back);
    double out2[8];
    if (tsgbm_estimator_estimate(again, y, 400, out2, 8) != TSGBM_STATUS_OK) return 10;
    if (out2[0] != out[0]) return 11;

    tsgbm_estimator_free(again);
    tsgbm_estimator_free(est);
    tsgbm_estimator_free(NULL);
    return 0;
}
