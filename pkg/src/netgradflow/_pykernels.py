"""Pure numpy stepping kernels; used when the compiled extension is unavailable.

Both backends share one contract. ``*_advance`` takes up to ``nsteps`` steps
and stops at the first step whose result is unusable, returning the last valid
state together with a status code from :mod:`netgradflow.kernels`.
"""
from __future__ import annotations

import numpy as np

from .entropy import EntropyModel, phi2
from .errors import DomainViolation, NonPositiveDiffusivity, SingularStage
from .field import check_positive, cumulative_u, cumulative_V
from .imex import ImexTableau, imex_step

OK, BELOW_FLOOR, NONPOSITIVE_STAGE, SINGULAR_STAGE, DOMAIN_VIOLATION = range(5)


def pde_multiplier(D, R, S, h, ent: EntropyModel) -> np.ndarray:
    check_positive(D)
    u = cumulative_u(R, D, h)
    V = cumulative_V(phi2(ent, u), S, h)
    return R * V / (D * D * D)


def pde_advance(D, R, S, h, ent, tableau: ImexTableau, dt, nsteps, floor):
    D = np.array(D, dtype=float)
    rejected = np.nan

    def M(y):
        return pde_multiplier(y, R, S, h, ent)

    for n in range(nsteps):
        try:
            new = imex_step(D, dt, M, tableau)
        except NonPositiveDiffusivity:
            return D, n, NONPOSITIVE_STAGE, rejected
        except SingularStage:
            return D, n, SINGULAR_STAGE, rejected
        except DomainViolation:
            return D, n, DOMAIN_VIOLATION, rejected
        if not np.all(np.isfinite(new)) or np.min(new) <= floor:
            rejected = float(np.min(new)) if np.all(np.isfinite(new)) else np.nan
            return D, n, BELOW_FLOOR, rejected
        D = new
    return D, nsteps, OK, rejected


def delta_multipliers(D1, D2, a, b, x0, x1, ent: EntropyModel) -> tuple[float, float]:
    ux1 = (a - b) * (1.0 - x1) / D2
    ux0 = a * (x1 - x0) / D1 + ux1
    p0, p1 = phi2(ent, ux0), phi2(ent, ux1)
    return a * a * p0 / (D1 * D1 * D1), (a - b) * (a * p0 - b * p1) / (D2 * D2 * D2)


def delta_advance(state, a, b, x0, x1, ent, tableau: ImexTableau, dt, nsteps):
    y = np.array(state, dtype=float)
    rejected = np.array([np.nan, np.nan])

    def M(z):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.array(delta_multipliers(z[0], z[1], a, b, x0, x1, ent))

    for n in range(nsteps):
        try:
            new = imex_step(y, dt, M, tableau)
        except SingularStage:
            return y, n, SINGULAR_STAGE, rejected
        except DomainViolation:
            return y, n, DOMAIN_VIOLATION, rejected
        if not np.all(np.isfinite(new)) or np.min(new) <= 0.0:
            return y, n, BELOW_FLOOR, new
        y = new
    return y, nsteps, OK, rejected
