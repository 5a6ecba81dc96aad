#include <math.h>
#include <stdio.h>
#include <string.h>

#include "rescue_sim.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);

    double pitch = 0.0;
    CHECK(rs_tip_over_angle(RS_AXIS_PITCH, &pitch) == RS_OK);
    CHECK(fabs(pitch - 64.98) < 0.01);
    CHECK(rs_tip_over_angle(7, &pitch) == RS_ERR_INVALID_ARG);

    char msg[128];
    size_t len = sizeof msg;
    CHECK(rs_last_error(msg, &len) == RS_OK);
    CHECK(strstr(msg, "axis") != NULL);

    bool ok = false;
    CHECK(rs_check_climbable(30.0, 90.0, 0.0, &ok) == RS_OK && ok);

    RsMetrics m;
    CHECK(rs_metrics(3, 1, 2, 4, &m) == RS_OK);
    CHECK(fabs(m.recall - 0.6) < 1e-12);

    RsWorld *world = NULL;
    CHECK(rs_world_load(argv[1], &world) == RS_OK && world != NULL);
    double forward[6] = {1, 0, 0, 0, 0, 0};
    for (uint64_t i = 0; i < 10; i++) {
        CHECK(rs_world_step_command(world, i, i * 20, forward) == RS_OK);
    }
    RsWorldState s;
    CHECK(rs_world_state(world, &s) == RS_OK);
    CHECK(s.tick == 10 && s.status == RS_STATUS_RUNNING);
    len = 0;
    CHECK(rs_world_telemetry_json(world, NULL, &len) == RS_ERR_BUFFER && len > 0);
    rs_world_free(world);

    puts("ok");
    return 0;
}
