"""Double Butcher tableaux and the partitioned IMEX step for ``y' = M(y) y``.

The multiplier is always evaluated at explicit stage values, so every implicit
stage reduces to a componentwise division. No nonlinear solve is needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, SingularStage

SINGULAR_THRESHOLD = 1e-14


@dataclass(frozen=True, eq=False)
class ImexTableau:
    """Explicit/implicit coefficient pair sharing one weight vector."""

    A_ex: np.ndarray
    A_im: np.ndarray
    b: np.ndarray
    c_ex: np.ndarray = field(default=None)
    c_im: np.ndarray = field(default=None)
    name: str = "custom"

    def __post_init__(self) -> None:
        A_ex = np.array(self.A_ex, dtype=float)
        A_im = np.array(self.A_im, dtype=float)
        b = np.array(self.b, dtype=float)
        s = b.size
        if A_ex.shape != (s, s) or A_im.shape != (s, s):
            raise ConfigError(f"tableau shapes disagree: A_ex {A_ex.shape}, A_im {A_im.shape}, b {b.shape}")
        c_ex = A_ex.sum(axis=1) if self.c_ex is None else np.array(self.c_ex, dtype=float)
        c_im = A_im.sum(axis=1) if self.c_im is None else np.array(self.c_im, dtype=float)
        for arr in (A_ex, A_im, b, c_ex, c_im):
            arr.flags.writeable = False
        for name, val in (("A_ex", A_ex), ("A_im", A_im), ("b", b), ("c_ex", c_ex), ("c_im", c_im)):
            object.__setattr__(self, name, val)
        self.validate()

    @property
    def s(self) -> int:
        return self.b.size

    @property
    def stiffly_accurate(self) -> bool:
        """True when the last implicit row equals the weights."""
        return bool(np.max(np.abs(self.A_im[-1] - self.b)) <= 1e-12)

    def validate(self, tol: float = 1e-12) -> None:
        """Raise :class:`ConfigError` if a structural invariant is broken."""
        if np.any(np.triu(self.A_ex) != 0.0):
            raise ConfigError("explicit matrix must be strictly lower triangular")
        if np.any(np.triu(self.A_im, k=1) != 0.0):
            raise ConfigError("implicit matrix must be lower triangular")
        if np.any(np.diag(self.A_im) == 0.0):
            raise ConfigError("implicit matrix needs a nonzero diagonal")
        if np.max(np.abs(self.c_ex - self.A_ex.sum(axis=1))) > tol:
            raise ConfigError("explicit abscissae must equal the row sums")
        if np.max(np.abs(self.c_im - self.A_im.sum(axis=1))) > tol:
            raise ConfigError("implicit abscissae must equal the row sums")


def ssp_ldirk3_433() -> ImexTableau:
    """The four-stage, third-order SSP/L-stable IMEX pair with shared weights."""
    lam = 0.24169426078821
    mu = lam / 4.0
    eta = 0.12915286960590
    A_ex = [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.25, 0.25, 0.0],
    ]
    A_im = [
        [lam, 0.0, 0.0, 0.0],
        [-lam, lam, 0.0, 0.0],
        [0.0, 1.0 - lam, lam, 0.0],
        [mu, eta, 0.5 - mu - eta - lam, lam],
    ]
    b = [0.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]
    return ImexTableau(
        A_ex, A_im, b,
        c_ex=[0.0, 0.0, 1.0, 0.5],
        c_im=[lam, 0.0, 1.0, 0.5],
        name="SSP-LDIRK3(4,3,3)",
    )


def imex_euler() -> ImexTableau:
    """Forward/backward Euler pair; first order."""
    return ImexTableau([[0.0]], [[1.0]], [1.0], name="IMEX-Euler")


@dataclass(frozen=True)
class OrderReport:
    """Residuals of the classical order conditions up to order three.

    ``residuals[part][name]`` holds ``lhs - 1`` for part ``explicit`` or
    ``implicit`` and names ``b``, ``bc``, ``bc2``, ``bAc``. ``coupling`` holds
    the mixed conditions that a partitioned pair also needs for order three.
    """

    residuals: dict[str, dict[str, float]]
    coupling: dict[str, float]

    def max_residual(self, include_coupling: bool = False) -> float:
        vals = [abs(v) for part in self.residuals.values() for v in part.values()]
        if include_coupling:
            vals += [abs(v) for v in self.coupling.values()]
        return max(vals)

    def order_at_least(self, p: int, tol: float = 1e-10) -> bool:
        needed = ["b", "bc", "bc2", "bAc"][: {1: 1, 2: 2, 3: 4}[p]]
        return all(abs(self.residuals[part][k]) < tol for part in self.residuals for k in needed)


def _conditions(A: np.ndarray, b: np.ndarray) -> dict[str, float]:
    c = A.sum(axis=1)
    return {
        "b": float(b.sum() - 1.0),
        "bc": float(2.0 * b @ c - 1.0),
        "bc2": float(3.0 * b @ (c * c) - 1.0),
        "bAc": float(6.0 * b @ A @ c - 1.0),
    }


def check_order3(t: ImexTableau) -> OrderReport:
    """Evaluate the four order conditions for each half of the tableau.

    The abscissae are recomputed as row sums so the conditions read exactly as
    the double sums over the coefficient matrices.
    """
    c_e, c_i = t.A_ex.sum(axis=1), t.A_im.sum(axis=1)
    b = t.b
    coupling = {
        "b_ce_ci": float(3.0 * b @ (c_e * c_i) - 1.0),
        "b_Aex_ci": float(6.0 * b @ t.A_ex @ c_i - 1.0),
        "b_Aim_ce": float(6.0 * b @ t.A_im @ c_e - 1.0),
    }
    return OrderReport(
        residuals={"explicit": _conditions(t.A_ex, b), "implicit": _conditions(t.A_im, b)},
        coupling=coupling,
    )


Multiplier = Callable[[np.ndarray], np.ndarray]


def imex_step(state, dt: float, M: Multiplier, t: ImexTableau) -> np.ndarray:
    """Advance ``y' = M(y) y`` by one step of size ``dt``.

    ``M`` maps an explicit stage value to the per-component multiplier. Stages
    whose explicit row is identically zero reuse the first multiplier, since
    their explicit value is the step's starting state.

    Raises :class:`SingularStage` when ``1 - dt a_ii M`` nearly vanishes for
    some stage and component.
    """
    return imex_stages(state, dt, M, t)[0]


def imex_stages(state, dt: float, M: Multiplier, t: ImexTableau) -> tuple[np.ndarray, np.ndarray]:
    """Like :func:`imex_step` but also return the implicit stage values, shape ``(s, ...)``."""
    y0 = np.asarray(state, dtype=float)
    s = t.s
    K = np.empty((s,) + y0.shape)
    Y = np.empty_like(K)
    M0 = None
    for i in range(s):
        if i == 0 or not t.A_ex[i, :i].any():
            if M0 is None:
                M0 = np.asarray(M(y0), dtype=float)
            Mi = M0
        else:
            y_ex = y0 + dt * np.tensordot(t.A_ex[i, :i], K[:i], axes=1)
            Mi = np.asarray(M(y_ex), dtype=float)
        rhs = y0 + dt * np.tensordot(t.A_im[i, :i], K[:i], axes=1) if i else y0
        denom = 1.0 - dt * t.A_im[i, i] * Mi
        if np.any(np.abs(denom) < SINGULAR_THRESHOLD):
            raise SingularStage(f"implicit stage {i + 1} denominator vanished (dt={dt:g})")
        Y[i] = rhs / denom
        K[i] = Mi * Y[i]
    return y0 + dt * np.tensordot(t.b, K, axes=1), Y
