#include <stdio.h>

#include "liouqsl.h"

int main(void) {
    LqSpec *spec = NULL;
    LqDensity *ss = NULL;
    double re[4], im[4];

    if (lq_spec_amplitude_damping(0.01, 0.5, &spec) != LQ_STATUS_OK) {
        fprintf(stderr, "%s\n", lq_last_error());
        return 1;
    }
    if (lq_steady_state(spec, &ss) != LQ_STATUS_OK || lq_density_get(ss, re, im, 4) != LQ_STATUS_OK) {
        fprintf(stderr, "%s\n", lq_last_error());
        return 1;
    }
    printf("%.12f %.12f\n", re[0], re[3]);
    lq_density_free(ss);
    lq_spec_free(spec);
    return 0;
}
