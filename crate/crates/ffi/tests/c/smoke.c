#include <math.h>
#include <stdio.h>
#include "cdgate.h"

static int fail(const char *what, CdgStatus s) {
    const char *msg = cdg_last_error_message();
    fprintf(stderr, "%s: status %d: %s\n", what, (int)s, msg ? msg : "(none)");
    return 1;
}

int main(void) {
    CdgConfig *cfg = NULL;
    CdgStatus s = cdg_config_from_preset("fig2", &cfg);
    if (s != CDG_STATUS_OK) return fail("preset", s);

    CdgGateResult *res = NULL;
    s = cdg_gate_run(cfg, &res);
    if (s != CDG_STATUS_OK) return fail("gate", s);
    double phi = 0.0;
    s = cdg_gate_conditional_phase(res, &phi);
    if (s != CDG_STATUS_OK) return fail("phase", s);
    double p = 0.0;
    s = cdg_gate_return_population(res, 7, &p);
    if (s != CDG_STATUS_INDEX_OUT_OF_RANGE) return fail("index check", s);
    cdg_gate_free(res);

    s = cdg_config_set(cfg, "gate.blockade", "\"4 GHz_over_2pi\"");
    if (s != CDG_STATUS_OK) return fail("set", s);
    CdgBellScore score;
    s = cdg_bell(cfg, &score);
    if (s != CDG_STATUS_OK) return fail("bell", s);
    cdg_config_free(cfg);

    if (cdg_config_from_toml("[scheme]\nkind = 1\n", &cfg) != CDG_STATUS_CONFIG || cfg != NULL)
        return fail("bad toml", CDG_STATUS_OTHER);

    printf("conditional_phase=%.9f fidelity=%.9f version=%s\n", fabs(phi), score.fidelity, cdg_version());
    return 0;
}
