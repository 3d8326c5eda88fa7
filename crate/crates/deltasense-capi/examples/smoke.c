/* Minimal consumer of the C interface: plan thresholds for a random
 * 5-device deployment, replay them through the simulator, and exercise
 * the error channel.
 *
 * Build (from the repository root, after `cargo build --release`):
 *
 *   cc -std=c11 -Wall -Wextra \
 *      -Icrates/deltasense-capi/include \
 *      crates/deltasense-capi/examples/smoke.c \
 *      target/release/libdeltasense_capi.a \
 *      -lm -lpthread -ldl -o smoke
 */
#include <assert.h>
#include <stdio.h>
#include <string.h>
#include "deltasense.h"

int main(void) {
    printf("deltasense %s\n", ds_version());

    DsModel *model = NULL;
    assert(ds_model_new(1.0, 0.1, 0.075, &model) == DS_STATUS_OK);

    DsDeployment *dep = NULL;
    assert(ds_deployment_generate(50.0, 50.0, 5, 3, &dep) == DS_STATUS_OK);
    assert(ds_deployment_len(dep) == 5);

    DsCalibration *cal = NULL;
    assert(ds_calibration_new(dep, model, 20000, 4, &cal) == DS_STATUS_OK);

    double delta[5];
    DsSolveInfo info;
    assert(ds_solve(model, dep, cal, "equal", 1, delta, 5, &info) == DS_STATUS_OK);
    printf("equal: W=%.3e  E[P_e]=%.4f  feasible=%d\n",
           info.objective, info.expected_p_e, (int)info.feasible);

    DsSimStats stats;
    assert(ds_simulate(model, dep, delta, 5, 100000, 1, &stats) == DS_STATUS_OK);
    printf("simulated: P_e=%.4f (+/- %.4f)\n", stats.error_rate, stats.error_rate_std);

    /* A budget at or above alpha is rejected; the message explains why. */
    DsModel *bad = NULL;
    assert(ds_model_new(1.0, 0.1, 0.5, &bad) == DS_STATUS_INVALID_ARGUMENT);
    char msg[128];
    size_t needed = ds_last_error_message(msg, sizeof msg);
    assert(needed > 1 && strlen(msg) > 0);
    printf("expected failure message: %s\n", msg);

    ds_calibration_free(cal);
    ds_deployment_free(dep);
    ds_model_free(model);
    puts("smoke test passed");
    return 0;
}
