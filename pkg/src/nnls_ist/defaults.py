"""Default grid sizes and tolerances, echoed verbatim into run manifests."""

from __future__ import annotations

L_X = 30.0
H_X = 2.0 ** -7
K_MAX = 24.0
N_K = 2 ** 12

DECAY_TOL = 1e-10
SPEC_TOL = 1e-8
SING_FLOOR = 1e-6
ARG_MARGIN = 0.05
AXIS_REJECT = 1e-3
DET_FLOOR = 1e-12
DISC_FLOOR = 1e-10
NEUMANN_TOL = 1e-10
NEUMANN_MAXITER = 200
COND_MAX = 1e12
PROBE_EPS = 1e-4
ADOT_RADIUS = 1e-4
WINDOW_FRACTION = 0.05
GUARD = 1e6
OVERFLOW = 1e12
EXCISION = 0.1


def as_dict() -> dict[str, float]:
    return {k.lower(): v for k, v in globals().items() if k.isupper()}
