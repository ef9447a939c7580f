"""The two-value system ``(D1, D2)`` produced by a pair of point sources.

With ``S = a delta_x0 - b delta_x1`` the diffusivity is piecewise constant:
``D_I0`` on ``[0, x0)`` (never changes), ``D1`` on ``[x0, x1)`` and ``D2`` on
``[x1, 1]``. Only ``D1`` and ``D2`` evolve.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from scipy import integrate

from . import kernels
from .entropy import EntropyKind, EntropyModel, phi2
from .errors import ConfigError, NonPositiveDiffusivity
from .imex import ImexTableau, ssp_ldirk3_433
from .pde_solver import Completed, step_schedule
from .source import DeltaPair

logger = logging.getLogger(__name__)

MAX_SNAPSHOTS = 1000
OUTSIDE_FOCUS = "a < b lies outside the regime the reference experiments explore"


@dataclass(frozen=True)
class DeltaState:
    D1: float
    D2: float
    source: DeltaPair

    def __post_init__(self) -> None:
        if not (self.D1 > 0 and self.D2 > 0):
            raise NonPositiveDiffusivity(f"need D1, D2 > 0, got ({self.D1}, {self.D2})")

    a = property(lambda self: self.source.a)
    b = property(lambda self: self.source.b)
    x0 = property(lambda self: self.source.x0)
    x1 = property(lambda self: self.source.x1)


def u_at_deltas(s: DeltaState) -> tuple[float, float]:
    """Potential at the two source points, in closed form."""
    u_x1 = (s.a - s.b) * (1.0 - s.x1) / s.D2
    return s.a * (s.x1 - s.x0) / s.D1 + u_x1, u_x1


def delta_multipliers(s: DeltaState, ent: EntropyModel) -> tuple[float, float]:
    """``(M1, M2)`` such that ``D1' = M1 D1`` and ``D2' = M2 D2``."""
    u0, u1 = u_at_deltas(s)
    p0, p1 = phi2(ent, u0), phi2(ent, u1)
    a, b = s.a, s.b
    return a * a * p0 / s.D1**3, (a - b) * (a * p0 - b * p1) / s.D2**3


def delta_energy(s: DeltaState, ent: EntropyModel) -> float:
    """``E = int R^2 phi''(u) / D`` over the two plateaus where ``R != 0``."""
    a, b, x0, x1 = s.a, s.b, s.x0, s.x1
    _, u1 = u_at_deltas(s)

    def f1(x):
        return phi2(ent, a * (x1 - x) / s.D1 + u1)

    def f2(x):
        return phi2(ent, (a - b) * (1.0 - x) / s.D2)

    I1 = a * a / s.D1 * integrate.quad(f1, x0, x1, limit=200)[0]
    I2 = (a - b) ** 2 / s.D2 * integrate.quad(f2, x1, 1.0, limit=200)[0]
    return I1 + I2


@dataclass(frozen=True, eq=False)
class DeltaRunConfig:
    """Initial values, horizon and step for a delta-pair run.

    ``D_I0`` is the constant plateau on ``[0, x0)``; it is reported but never
    evolved.
    """

    source: DeltaPair
    entropy: EntropyModel
    D1_0: float = 1.0
    D2_0: float = 1.0
    dt: float = 1e-3
    t_fin: float = 1.0
    snapshot_every: int | None = None
    D_I0: float = 1.0
    tableau: ImexTableau = field(default_factory=ssp_ldirk3_433)
    backend: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.source, DeltaPair):
            raise ConfigError("the delta solver needs a delta_pair source")
        if not (self.D1_0 > 0 and self.D2_0 > 0 and self.D_I0 > 0):
            raise ConfigError("initial plateau values must be positive")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.t_fin > 0 and math.isfinite(self.t_fin)):
            raise ConfigError(f"t_fin must be positive, got {self.t_fin}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigError(f"snapshot_every must be >= 1, got {self.snapshot_every}")

    @property
    def state0(self) -> DeltaState:
        return DeltaState(self.D1_0, self.D2_0, self.source)

    @property
    def n_steps(self) -> int:
        return step_schedule(self.t_fin, self.dt)[0]

    def snapshot_stride(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return max(1, math.ceil(self.n_steps / MAX_SNAPSHOTS))


@dataclass(frozen=True)
class DeltaTouchdown:
    """``D2`` left the positive axis during the step after ``t_last_valid``.

    ``D2_rejected`` is the value the rejected step produced; it is ``None``
    when the step failed before producing one (singular stage or entropy
    domain violation).
    """

    t_last_valid: float
    D1_last: float
    D2_last: float
    D2_rejected: float | None
    reason: str

    kind = "Touchdown"

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "t_last_valid": self.t_last_valid,
            "D1_last": self.D1_last,
            "D2_last": self.D2_last,
            "D2_rejected": self.D2_rejected,
            "reason": self.reason,
        }


@dataclass(eq=False)
class DeltaTrajectory:
    source: DeltaPair
    entropy: EntropyModel
    t: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    phi2_u_x1: np.ndarray
    termination: Union[Completed, DeltaTouchdown]
    steps: int
    backend: str

    @property
    def touched_down(self) -> bool:
        return isinstance(self.termination, DeltaTouchdown)

    def state(self, k: int = -1) -> DeltaState:
        return DeltaState(float(self.D1[k]), float(self.D2[k]), self.source)

    def energies(self) -> np.ndarray:
        return np.array([delta_energy(self.state(k), self.entropy) for k in range(self.t.size)])


def run_delta(cfg: DeltaRunConfig) -> DeltaTrajectory:
    """Integrate ``(D1, D2)`` to ``t_fin`` or until ``D2`` stops being positive."""
    src, ent = cfg.source, cfg.entropy
    if src.a < src.b:
        logger.warning(OUTSIDE_FOCUS)
    k = kernels.get_backend(cfg.backend)
    n_steps, last_dt = step_schedule(cfg.t_fin, cfg.dt)
    stride = cfg.snapshot_stride()
    y = np.array([cfg.D1_0, cfg.D2_0])
    rows = [(0.0, y[0], y[1])]
    n = 0
    term: Union[Completed, DeltaTouchdown] = Completed(cfg.t_fin)

    while n < n_steps:
        if n < n_steps - 1:
            chunk = min(stride - n % stride, n_steps - 1 - n)
            y, done, status, rej = k.delta_advance(y, src.a, src.b, src.x0, src.x1, ent, cfg.tableau, cfg.dt, chunk)
        else:
            y, done, status, rej = k.delta_advance(y, src.a, src.b, src.x0, src.x1, ent, cfg.tableau, last_dt, 1)
        n += done
        t = cfg.t_fin if n == n_steps else n * cfg.dt
        if status != kernels.OK:
            if rows[-1][0] != t:
                rows.append((t, y[0], y[1]))
            d2_rej = float(rej[1]) if np.isfinite(rej[1]) else None
            term = DeltaTouchdown(t, float(y[0]), float(y[1]), d2_rej, kernels.STATUS_NAMES[status])
            logger.info("D2 touchdown after t=%.9g (D2 %.3g -> %s)", t, y[1], d2_rej)
            break
        if n % stride == 0 or n == n_steps:
            rows.append((t, y[0], y[1]))

    arr = np.array(rows, dtype=float)
    u1 = (src.a - src.b) * (1.0 - src.x1) / arr[:, 2]
    return DeltaTrajectory(
        src, ent, arr[:, 0], arr[:, 1], arr[:, 2],
        np.asarray(phi2(ent, u1), dtype=float), term, n, kernels.backend_name(k),
    )


# -- positivity conditions ---------------------------------------------------


@dataclass(frozen=True)
class ConditionCheck:
    """One sufficient condition; ``holds`` is ``None`` when it cannot be decided."""

    name: str
    holds: bool | None
    witness: str

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "holds": self.holds, "witness": self.witness}


@dataclass(frozen=True)
class DeltaVerdict:
    guaranteed: bool
    checks: tuple[ConditionCheck, ...]
    note: str = ""

    @property
    def status(self) -> str:
        return "GuaranteedPositive" if self.guaranteed else "Inconclusive"

    @property
    def conditions(self) -> tuple[str, ...]:
        """Names of every condition that holds."""
        return tuple(c.name for c in self.checks if c.holds)

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "conditions": list(self.conditions),
            "checks": [c.to_dict() for c in self.checks],
            "note": self.note,
        }


def _phi2_mass(ent: EntropyModel, sign: float) -> float:
    """``int_0^inf phi''(sign * v) dv`` for the sin-rational entropy.

    The integrand decays like ``1 / (v^2 (sigma + sin v))``; past ``V`` its
    average is ``1 / (sqrt(sigma^2 - 1) v^2)``, which gives the tail.
    """
    cut = 400.0 * math.pi
    body = integrate.quad(lambda v: phi2(ent, sign * v), 0.0, cut, limit=2000)[0]
    return body + 1.0 / (math.sqrt(ent.sigma**2 - 1.0) * cut)


def _checks_a_gt_b(ent: EntropyModel, ratio: float, E0: float | None, gap: float) -> list[ConditionCheck]:
    kind, sig = ent.kind, ent.sigma
    alpha: float | None = None
    if kind in (EntropyKind.CONSTANT, EntropyKind.FISHER, EntropyKind.SQUARE):
        integrand = {EntropyKind.CONSTANT: "1", EntropyKind.FISHER: "1/(u+1)", EntropyKind.SQUARE: "u^2"}[kind]
        c1 = ConditionCheck("energy_divergent", True, f"int_0^inf {integrand} du = inf")
    else:
        alpha = 1.0 if kind is EntropyKind.EXP_NEG else _phi2_mass(ent, 1.0)
        c1 = ConditionCheck("energy_divergent", False, f"int_0^inf phi'' du = alpha = {alpha:.10g} < inf")

    if alpha is None:
        c2 = ConditionCheck("energy_alpha", False, "alpha is infinite; covered by energy_divergent")
    elif E0 is None:
        c2 = ConditionCheck("energy_alpha", None, f"alpha = {alpha:.10g}; needs the initial energy")
    else:
        need = E0 / gap
        c2 = ConditionCheck("energy_alpha", alpha >= need, f"alpha = {alpha:.10g} vs E[D_I]/(a-b) = {need:.10g}")

    if kind is EntropyKind.EXP_NEG:
        c3 = ConditionCheck("quartic_integral", True, "int_1^inf e^v / v^4 dv = inf")
    else:
        finite = {
            EntropyKind.CONSTANT: "int_1^inf v^-4 dv = 1/3",
            EntropyKind.FISHER: "int_1^inf (v+1) v^-4 dv = 5/6",
            EntropyKind.SQUARE: "int_1^inf v^-6 dv = 1/5",
            EntropyKind.SIN_RATIONAL: "int_1^inf (v^2 (sin v + sigma) + 1) v^-4 dv < inf",
        }[kind]
        c3 = ConditionCheck("quartic_integral", False, finite)

    if kind is EntropyKind.EXP_NEG:
        c4 = ConditionCheck("ratio_liminf", False, f"ratio e^-z has no positive lower bound on compacts, b/a = {ratio:.6g}")
    else:
        lim = (sig - 1.0) / (sig + 1.0) if kind is EntropyKind.SIN_RATIONAL else 1.0
        c4 = ConditionCheck("ratio_liminf", lim > ratio, f"liminf ratio = {lim:.6g} vs b/a = {ratio:.6g}")
    return [c1, c2, c3, c4]


def _checks_a_lt_b(ent: EntropyModel, ratio: float, E0: float | None, gap: float) -> list[ConditionCheck]:
    kind, sig = ent.kind, ent.sigma
    beta: float | None = None
    if kind is EntropyKind.SIN_RATIONAL:
        beta = _phi2_mass(ent, -1.0)
        c1 = ConditionCheck("energy_divergent", False, f"int_-inf^0 phi'' du = beta = {beta:.10g} < inf")
    else:
        integrand = {EntropyKind.CONSTANT: "1", EntropyKind.EXP_NEG: "e^-u", EntropyKind.SQUARE: "u^2"}[kind]
        c1 = ConditionCheck("energy_divergent", True, f"int_-inf^0 {integrand} du = inf")

    if beta is None:
        c2 = ConditionCheck("energy_beta", False, "beta is infinite; covered by energy_divergent")
    elif E0 is None:
        c2 = ConditionCheck("energy_beta", None, f"beta = {beta:.10g}; needs the initial energy")
    else:
        need = E0 / gap
        c2 = ConditionCheck("energy_beta", beta >= need, f"beta = {beta:.10g} vs E[D_I]/(b-a) = {need:.10g}")

    finite = {
        EntropyKind.CONSTANT: "int_1^inf v^-4 dv = 1/3",
        EntropyKind.EXP_NEG: "int_1^inf e^-v v^-4 dv < inf",
        EntropyKind.SQUARE: "int_1^inf v^-6 dv = 1/5",
        EntropyKind.SIN_RATIONAL: "int_1^inf (v^2 (sigma - sin v) + 1) v^-4 dv < inf",
    }[kind]
    c3 = ConditionCheck("quartic_integral", False, finite)

    if kind is EntropyKind.EXP_NEG:
        c4 = ConditionCheck("ratio_limsup", True, f"sup of e^-z on compacts of (0, inf) is < 1 < b/a = {ratio:.6g}")
    else:
        lim = (sig + 1.0) / (sig - 1.0) if kind is EntropyKind.SIN_RATIONAL else 1.0
        c4 = ConditionCheck("ratio_limsup", lim < ratio, f"limsup ratio = {lim:.6g} vs b/a = {ratio:.6g}")
    return [c1, c2, c3, c4]


def check_delta_conditions(
    src: DeltaPair, ent: EntropyModel, state0: DeltaState | None = None
) -> DeltaVerdict:
    """Evaluate every sufficient condition for ``D2 > 0`` for all time.

    The energy-threshold conditions need the initial energy and are left
    undecided without ``state0``. The verdict lists all conditions that hold.
    """
    a, b = src.a, src.b
    if a == b:
        raise ConfigError("the delta conditions need a != b")
    E0 = delta_energy(state0, ent) if state0 is not None else None
    note = ""
    if ent.kind is EntropyKind.SIN_RATIONAL and ent.sigma <= 1.0:
        return DeltaVerdict(False, (), f"sigma = {ent.sigma:g} <= 1: phi'' is not positive everywhere")
    if a > b:
        checks = _checks_a_gt_b(ent, b / a, E0, a - b)
    elif ent.kind is EntropyKind.FISHER:
        checks = []
        note = OUTSIDE_FOCUS + "; u may leave the entropy domain u > -1"
    else:
        checks = _checks_a_lt_b(ent, b / a, E0, b - a)
        note = OUTSIDE_FOCUS
    return DeltaVerdict(any(c.holds for c in checks), tuple(checks), note)
