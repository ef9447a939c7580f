"""Uniform grid, nodal containers and the trapezoid quadratures for u, V and E.

Nodes are indexed ``0..N`` inclusive so that ``u_N = 0`` and ``V_0 = 0`` are
literal array entries.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .entropy import EntropyModel, phi2
from .errors import ConfigError, NonPositiveDiffusivity
from .source import SourceModel


@dataclass(frozen=True)
class Grid:
    N: int
    L: float = 1.0

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"grid needs an integer N >= 2 intervals, got {self.N}")
        if not self.L > 0:
            raise ConfigError(f"domain length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.N + 1) * self.h
        x[-1] = self.L
        x.flags.writeable = False
        return x


@dataclass(frozen=True, eq=False)
class NodalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.N + 1,):
            raise ConfigError(f"expected {self.grid.N + 1} nodal values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True, eq=False)
class DiffusivityField(NodalField):
    """Nodal diffusivity; every value must be strictly positive."""

    def __post_init__(self) -> None:
        super().__post_init__()
        check_positive(self.values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> DiffusivityField:
        return cls(grid, np.full(grid.N + 1, float(value)))


def check_positive(D: np.ndarray) -> None:
    if not np.all(D > 0.0):
        bad = np.flatnonzero(~(D > 0.0))
        i = int(bad[0])
        raise NonPositiveDiffusivity(
            f"diffusivity must be strictly positive; D[{i}] = {D[i]!r} ({bad.size} bad nodes)"
        )


# Array-level kernels. They assume the inputs were checked by the caller.


def cumulative_u(R: np.ndarray, D: np.ndarray, h: float) -> np.ndarray:
    """Right-to-left trapezoid accumulation of ``R/D`` with ``u_N = 0``."""
    f = R / D
    panels = (f[:-1] + f[1:]) * (h / 2.0)
    u = np.empty_like(f)
    u[-1] = 0.0
    u[:-1] = np.cumsum(panels[::-1])[::-1]
    return u


def cumulative_V(p2: np.ndarray, S: np.ndarray, h: float) -> np.ndarray:
    """Left-to-right trapezoid accumulation of ``phi''(u) S`` with ``V_0 = 0``."""
    g = p2 * S
    panels = (g[1:] + g[:-1]) * (h / 2.0)
    V = np.empty_like(g)
    V[0] = 0.0
    V[1:] = np.cumsum(panels)
    return V


def trapezoid(f: np.ndarray, h: float) -> float:
    return float(h * (np.sum(f) - 0.5 * (f[0] + f[-1])))


def compute_u(D: DiffusivityField, src: SourceModel) -> NodalField:
    """Trapezoid approximation of ``u(x) = int_x^L R(y)/D(y) dy`` at every node."""
    vals = D.values
    check_positive(vals)
    R = src.primitive(D.grid.nodes)
    return NodalField(D.grid, cumulative_u(R, vals, D.grid.h))


def compute_V(u: NodalField, src: SourceModel, ent: EntropyModel) -> NodalField:
    """Trapezoid approximation of ``V(x) = int_0^x phi''(u) S dy``; needs a pointwise source."""
    S = src.source(u.grid.nodes)
    return NodalField(u.grid, cumulative_V(phi2(ent, u.values), S, u.grid.h))


def energy(D: DiffusivityField, u: NodalField, src: SourceModel, ent: EntropyModel) -> float:
    """Trapezoid approximation of ``E[D] = int R^2/D phi''(u) dx``."""
    check_positive(D.values)
    R = src.primitive(D.grid.nodes)
    return trapezoid(R * R / D.values * phi2(ent, u.values), D.grid.h)


@dataclass(frozen=True)
class BoundReport:
    lhs: float
    rhs: float
    satisfied: bool


def sup_bound_check(D: DiffusivityField, u: NodalField, src: SourceModel) -> BoundReport:
    """Compare ``max |u|`` with ``||S||_1 ||1/D||_1`` (trapezoid for the latter)."""
    lhs = float(np.max(np.abs(u.values)))
    rhs = src.l1_norm() * trapezoid(1.0 / D.values, D.grid.h)
    return BoundReport(lhs, rhs, lhs <= rhs * (1.0 + 1e-8))
