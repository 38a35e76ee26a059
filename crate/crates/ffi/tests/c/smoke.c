#include <stdio.h>
#include "adarefiner.h"

int main(void) {
    AdrWorld *world = NULL;
    if (adr_world_new(7, 16, &world) != ADR_STATUS_OK) return 1;
    AdrStepResult r;
    int steps = 0;
    bool done = false;
    while (!done && steps < 500) {
        if (adr_world_step(world, (uint32_t)(steps % ADR_ACTION_COUNT), &r) != ADR_STATUS_OK) return 2;
        done = r.done;
        steps++;
    }
    AdrPlayerStatus s;
    if (adr_world_status(world, &s) != ADR_STATUS_OK) return 3;
    if (adr_world_step(world, 99, &r) != ADR_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    if (adr_last_error(msg, sizeof msg) == 0) return 5;
    adr_world_free(world);

    double rates[ADR_ACHIEVEMENT_COUNT] = {0};
    double score = -1.0;
    if (adr_crafter_score(rates, ADR_ACHIEVEMENT_COUNT, &score) != ADR_STATUS_OK || score != 0.0) return 6;
    uint32_t depth = 0;
    if (adr_achievement_depth(1, &depth) != ADR_STATUS_OK || depth != 8) return 7;
    printf("ok %d %d %s\n", steps, s.health, msg);
    return 0;
}
