"""Time integration of the semi-discrete system ``D_t = M(D) D`` with ``M = R V / D^3``."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from . import kernels
from .entropy import EntropyModel, phi2
from .errors import ConfigError
from .field import (
    DiffusivityField,
    Grid,
    NodalField,
    check_positive,
    compute_u,
    compute_V,
    cumulative_u,
    trapezoid,
)
from .imex import ImexTableau, ssp_ldirk3_433
from .source import LinearSource

logger = logging.getLogger(__name__)

MAX_SNAPSHOTS = 200


def step_schedule(t_fin: float, dt: float) -> tuple[int, float]:
    """Return ``(n_steps, last_dt)``: the step count rounded up and the final, possibly shorter, step."""
    ratio = t_fin / dt
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 1e-9 * ratio:
        n = math.ceil(ratio)
    return n, t_fin - (n - 1) * dt


@dataclass(frozen=True, eq=False)
class PdeRunConfig:
    """A continuum run on ``[0, source.L]``.

    ``D_init`` is a constant or a per-node array of length ``N + 1``. When
    ``snapshot_every`` is ``None`` it is chosen so that at most 200 snapshots
    are stored.
    """

    N: int
    dt: float
    t_fin: float
    source: LinearSource
    entropy: EntropyModel
    D_init: Union[float, np.ndarray] = 1.0
    snapshot_every: int | None = None
    floor: float = 1e-10
    tableau: ImexTableau = field(default_factory=ssp_ldirk3_433)
    backend: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.source, LinearSource):
            raise ConfigError("the PDE solver needs a linear source; use the delta solver for delta pairs")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not (self.t_fin > 0 and math.isfinite(self.t_fin)):
            raise ConfigError(f"t_fin must be positive, got {self.t_fin}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise ConfigError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        D0 = self.initial_values()
        if not np.all(D0 >= self.floor) or not np.all(D0 > 0):
            raise ConfigError(f"initial diffusivity must be >= floor ({self.floor:g})")

    @property
    def grid(self) -> Grid:
        return Grid(self.N, self.source.L)

    @property
    def n_steps(self) -> int:
        return step_schedule(self.t_fin, self.dt)[0]

    def initial_values(self) -> np.ndarray:
        D0 = np.asarray(self.D_init, dtype=float)
        if D0.ndim == 0:
            return np.full(self.N + 1, float(D0))
        if D0.shape != (self.N + 1,):
            raise ConfigError(f"D_init needs {self.N + 1} nodal values, got shape {D0.shape}")
        return D0.copy()

    def snapshot_stride(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return max(1, math.ceil(self.n_steps / MAX_SNAPSHOTS))


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    D: np.ndarray
    u: np.ndarray
    energy: float
    min_D: float


@dataclass(frozen=True)
class Completed:
    t_final: float

    kind = "Completed"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t_final": self.t_final}


@dataclass(frozen=True)
class Touchdown:
    """Loss of positivity: ``D`` at ``t_last_valid`` is the last accepted state."""

    t_last_valid: float
    argmin_x: float
    min_D: float
    reason: str
    rejected_min: float | None = None

    kind = "Touchdown"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "t_last_valid": self.t_last_valid,
            "argmin_x": self.argmin_x,
            "min_D": self.min_D,
            "reason": self.reason,
            "rejected_min": self.rejected_min,
        }


@dataclass(eq=False)
class TrajectoryRecord:
    grid: Grid
    snapshots: list[Snapshot]
    termination: Union[Completed, Touchdown]
    steps: int
    backend: str

    @property
    def touched_down(self) -> bool:
        return isinstance(self.termination, Touchdown)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.snapshots])

    @property
    def min_D(self) -> np.ndarray:
        return np.array([s.min_D for s in self.snapshots])


def multiplier(D: DiffusivityField, src: LinearSource, ent: EntropyModel) -> NodalField:
    """``M_i = R_i V_i / D_i^3`` with ``V`` rebuilt from ``u(D)``."""
    u = compute_u(D, src)
    V = compute_V(u, src, ent)
    R = src.primitive(D.grid.nodes)
    return NodalField(D.grid, R * V.values / D.values**3)


def _snapshot(t: float, D: np.ndarray, R: np.ndarray, h: float, ent: EntropyModel) -> Snapshot:
    u = cumulative_u(R, D, h)
    E = trapezoid(R * R / D * phi2(ent, u), h)
    return Snapshot(t, D.copy(), u, E, float(D.min()))


def run(cfg: PdeRunConfig) -> TrajectoryRecord:
    """Integrate until ``t_fin`` or until the next step would lose positivity.

    A step whose result has a value at or below ``cfg.floor`` (or non-finite),
    whose explicit stage is non-positive, or whose implicit stage is singular
    ends the run with :class:`Touchdown`. The record then ends at the last
    accepted state; no further steps are taken.
    """
    k = kernels.get_backend(cfg.backend)
    grid = cfg.grid
    x = grid.nodes
    R, S = cfg.source.primitive(x), cfg.source.source(x)
    ent, h = cfg.entropy, grid.h
    D = cfg.initial_values()
    check_positive(D)

    n_steps, last_dt = step_schedule(cfg.t_fin, cfg.dt)
    stride = cfg.snapshot_stride()
    snaps = [_snapshot(0.0, D, R, h, ent)]
    n = 0
    status, rejected = kernels.OK, float("nan")

    while n < n_steps:
        if n < n_steps - 1:
            chunk = min(stride - n % stride, n_steps - 1 - n)
            D, done, status, rejected = k.pde_advance(D, R, S, h, ent, cfg.tableau, cfg.dt, chunk, cfg.floor)
        else:
            D, done, status, rejected = k.pde_advance(D, R, S, h, ent, cfg.tableau, last_dt, 1, cfg.floor)
        n += done
        t = cfg.t_fin if n == n_steps else n * cfg.dt
        if status != kernels.OK:
            if snaps[-1].t != t:
                snaps.append(_snapshot(t, D, R, h, ent))
            i = int(np.argmin(D))
            term = Touchdown(
                t_last_valid=t,
                argmin_x=float(x[i]),
                min_D=float(D[i]),
                reason=kernels.STATUS_NAMES[status],
                rejected_min=None if math.isnan(rejected) else float(rejected),
            )
            logger.info("touchdown at t=%.9g (min D %.3g at x=%.6g, %s)", t, D[i], x[i], term.reason)
            return TrajectoryRecord(grid, snaps, term, n, kernels.backend_name(k))
        if n % stride == 0 or n == n_steps:
            snaps.append(_snapshot(t, D, R, h, ent))

    return TrajectoryRecord(grid, snaps, Completed(cfg.t_fin), n, kernels.backend_name(k))


@dataclass(frozen=True)
class SweepRow:
    dt: float
    t_reached: float
    min_D: float
    termination: str


def _sweep_one(cfg: PdeRunConfig) -> SweepRow:
    rec = run(replace(cfg, snapshot_every=cfg.n_steps))
    last = rec.final
    return SweepRow(cfg.dt, last.t, last.min_D, rec.termination.kind)


def min_D_sweep(cfg: PdeRunConfig, dts: Sequence[float], workers: int | None = None) -> list[SweepRow]:
    """Run ``cfg`` at each time step and report ``min D`` at the last valid time.

    ``cfg.t_fin`` caps each run; touchdown is the expected outcome. Rows come
    back in the order of ``dts``, which must be strictly decreasing.
    """
    dts = [float(d) for d in dts]
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ConfigError(f"time steps must be strictly decreasing, got {dts}")
    cfgs = [replace(cfg, dt=d) for d in dts]
    if workers and workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, cfgs))
    return [_sweep_one(c) for c in cfgs]


def exact_constant_entropy(x: np.ndarray, src: LinearSource, D_init, t: float) -> np.ndarray:
    """Closed-form solution for ``phi'' = 1``: ``D^3 = D_init^3 + 3 R^2 t``."""
    R = src.primitive(x)
    return np.cbrt(np.asarray(D_init, dtype=float) ** 3 + 3.0 * R * R * t)
