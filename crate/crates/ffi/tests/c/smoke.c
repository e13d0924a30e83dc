#include <math.h>
#include <stdio.h>
#include "moment_forge.h"

int main(void) {
    MfStatus status;
    MfModel *model = mf_model_new("HME1D", 3, 1, &status);
    if (status != MF_STATUS_OK || model == NULL) return 1;
    double u[1] = {0.0};
    MfSystem *sys = mf_model_assemble_maxwellian(model, 1.0, u, 1.0, &status);
    if (status != MF_STATUS_OK) return 2;
    size_t n = mf_system_size(sys);
    double re[8], im[8], dir[1] = {1.0};
    MfVerdict verdict;
    if (mf_system_eigenvalues(sys, dir, re, im, 8, &verdict) != MF_STATUS_OK) return 3;
    if (n != 4 || verdict != MF_VERDICT_HYPERBOLIC) return 4;
    if (fabs(re[3] - 2.3344142183389773) > 1e-12) return 5;
    if (mf_model_new("Nope", 3, 1, &status) != NULL || status != MF_STATUS_UNKNOWN_MODEL) return 6;
    printf("%s\n", mf_last_error_message());
    mf_system_free(sys);
    mf_model_free(model);
    mf_model_free(NULL);
    return 0;
}
