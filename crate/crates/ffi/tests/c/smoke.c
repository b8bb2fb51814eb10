#include <math.h>
#include <stdio.h>
#include <string.h>

#include "lagflow.h"

static const char *CONFIG =
    "omega.kind = interval\n"
    "omega.interval = 0, 1\n"
    "generator.a = 2\n"
    "generator.b = 1\n"
    "grid.n = 20\n";

int main(void) {
    LagflowFlow *flow = NULL;
    if (lagflow_flow_new(CONFIG, &flow) != LAGFLOW_STATUS_OK) {
        fprintf(stderr, "new: %s\n", lagflow_last_error());
        return 1;
    }
    int converged = 0;
    if (lagflow_flow_step(flow, 10, &converged) != LAGFLOW_STATUS_OK || !converged) {
        fprintf(stderr, "step: %s\n", lagflow_last_error());
        return 1;
    }
    LagflowMonitors row;
    lagflow_flow_monitors(flow, &row);
    double c = 0.0;
    lagflow_flow_speed(flow, &c);
    lagflow_flow_free(flow);
    if (fabs(c - atan(2.0)) > 1e-10 || fabs(row.max_f - atan(2.0)) > 1e-10) {
        fprintf(stderr, "c = %.17g\n", c);
        return 1;
    }
    if (lagflow_flow_new("omega.kind = disc\ncontrol.sigma = 1.5\n", &flow) != LAGFLOW_STATUS_PARSE ||
        strstr(lagflow_last_error(), "line 2") == NULL) {
        fprintf(stderr, "expected a parse error, got: %s\n", lagflow_last_error());
        return 1;
    }
    printf("ok %s\n", lagflow_version());
    return 0;
}
