"""Error norms, convergence tables and observed orders."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .delta_solver import DeltaRunConfig, DeltaTouchdown, run_delta
from .entropy import EntropyKind
from .errors import ConfigError, ZeroReference
from .pde_solver import PdeRunConfig, Touchdown, exact_constant_entropy, run

DEFAULT_REFERENCE_N = 10_000


class StudyAborted(RuntimeError):
    """A run inside a convergence study touched down before ``t_fin``."""

    def __init__(self, dt: float, termination):
        super().__init__(f"run with dt={dt:g} touched down: {termination}")
        self.dt = dt
        self.termination = termination


def rel_l2_error(D, D_ref) -> float:
    """``||D - D_ref||_2 / ||D_ref||_2`` over flattened arrays of equal shape."""
    D, D_ref = np.asarray(D, dtype=float), np.asarray(D_ref, dtype=float)
    if D.shape != D_ref.shape:
        raise ValueError(f"shape mismatch: {D.shape} vs {D_ref.shape}")
    ref = np.linalg.norm(D_ref.ravel())
    if ref == 0.0:
        raise ZeroReference("reference has zero norm")
    return float(np.linalg.norm((D - D_ref).ravel()) / ref)


def observed_orders(errors: Sequence[float], steps: Sequence[float]) -> list[float | None]:
    """Consecutive-pair orders ``log(e_{k-1}/e_k) / log(dt_{k-1}/dt_k)``; the first is ``None``."""
    out: list[float | None] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(steps[k - 1] / steps[k]))
        else:
            out.append(None)
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    h: float | None
    dt: float
    errors: dict[str, float]
    orders: dict[str, float | None]


@dataclass
class ConvergenceTable:
    """Errors per refinement for one or more quantities, rows by decreasing ``dt``.

    ``reference`` is ``"exact"`` or ``"fine"``; ``dt_ref`` is set for the latter.
    """

    quantities: tuple[str, ...]
    rows: list[ConvergenceRow]
    reference: str
    dt_ref: float | None = None
    notes: list[str] = field(default_factory=list)

    @classmethod
    def build(cls, quantities, hs, dts, errors: dict[str, list[float]], reference, dt_ref=None):
        orders = {q: observed_orders(errors[q], dts) for q in quantities}
        rows = [
            ConvergenceRow(
                hs[k], dts[k],
                {q: errors[q][k] for q in quantities},
                {q: orders[q][k] for q in quantities},
            )
            for k in range(len(dts))
        ]
        return cls(tuple(quantities), rows, reference, dt_ref)

    def errors(self, q: str | None = None) -> list[float]:
        q = q or self.quantities[0]
        return [r.errors[q] for r in self.rows]

    def orders(self, q: str | None = None) -> list[float | None]:
        q = q or self.quantities[0]
        return [r.orders[q] for r in self.rows]

    def last_order(self, q: str | None = None) -> float | None:
        return self.orders(q)[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "dt"] + [f"{p}_{q}" for q in self.quantities for p in ("error", "order")])
        for r in self.rows:
            cells = [_fmt(r.h), _fmt(r.dt)]
            for q in self.quantities:
                cells += [_fmt(r.errors[q]), _fmt(r.orders[q])]
            w.writerow(cells)
        return buf.getvalue()

    def summary(self) -> str:
        ref = "exact solution" if self.reference == "exact" else f"reference at dt={self.dt_ref:g}"
        lines = [f"convergence against {ref}"]
        for r in self.rows:
            parts = []
            for q in self.quantities:
                o = r.orders[q]
                parts.append(f"{q}: err {r.errors[q]:.3e}" + (f" order {o:.3f}" if o is not None else ""))
            lines.append(f"  dt={r.dt:.4g}  " + "  ".join(parts))
        return "\n".join(lines + self.notes)


def _fmt(v) -> str:
    return "" if v is None else format(v, ".17g")


def _pmap(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _check_pde(rec, dt):
    if isinstance(rec.termination, Touchdown):
        raise StudyAborted(dt, rec.termination)
    return rec.final.D


def _pde_exact_row(cfg: PdeRunConfig) -> float:
    D = _check_pde(run(cfg), cfg.dt)
    exact = exact_constant_entropy(cfg.grid.nodes, cfg.source, cfg.initial_values(), cfg.t_fin)
    return rel_l2_error(D, exact)


def _pde_final(cfg: PdeRunConfig) -> np.ndarray:
    return _check_pde(run(cfg), cfg.dt)


def _delta_final(cfg: DeltaRunConfig) -> np.ndarray:
    tr = run_delta(cfg)
    if isinstance(tr.termination, DeltaTouchdown):
        raise StudyAborted(cfg.dt, tr.termination)
    return np.array([tr.D1[-1], tr.D2[-1]])


def _sorted_desc(refinements) -> list[float]:
    vals = [float(r) for r in refinements]
    if not vals:
        raise ConfigError("need at least one refinement")
    if len(set(vals)) != len(vals):
        raise ConfigError(f"refinements must be distinct, got {vals}")
    return sorted(vals, reverse=True)


def convergence_study(
    problem: Union[PdeRunConfig, DeltaRunConfig],
    refinements: Sequence[float],
    *,
    reference: str = "exact",
    dt_ref: float | None = None,
    N: int | None = None,
    workers: int | None = None,
) -> ConvergenceTable:
    """Errors of ``problem`` over a list of refinements.

    For a PDE with ``reference="exact"`` each refinement sets ``h = dt`` and
    compares with the closed-form solution (constant entropy only). With
    ``reference="fine"`` the grid is fixed at ``N`` nodes (default 10^4) and
    each refinement is a time step compared with a run at ``dt_ref``. Delta
    problems always use a fine reference and report ``D1`` and ``D2``
    separately.

    Raises :class:`StudyAborted` if any run touches down.
    """
    steps = _sorted_desc(refinements)
    if isinstance(problem, DeltaRunConfig) or reference == "fine":
        if dt_ref is None or not dt_ref < min(steps) / 10.0:
            raise ConfigError(f"dt_ref must be below min(refinements)/10 = {min(steps) / 10.0:g}")

    if isinstance(problem, DeltaRunConfig):
        cfgs = [replace(problem, dt=d, snapshot_every=None) for d in steps + [dt_ref]]
        finals = _pmap(_delta_final, cfgs, workers)
        ref = finals[-1]
        errs = {
            "D1": [abs(f[0] - ref[0]) / abs(ref[0]) for f in finals[:-1]],
            "D2": [abs(f[1] - ref[1]) / abs(ref[1]) for f in finals[:-1]],
        }
        return ConvergenceTable.build(("D1", "D2"), [None] * len(steps), steps, errs, "fine", dt_ref)

    if not isinstance(problem, PdeRunConfig):
        raise ConfigError(f"cannot run a convergence study on {type(problem).__name__}")
    if np.ndim(problem.D_init) != 0:
        raise ConfigError("convergence studies need a constant initial diffusivity")

    if reference == "exact":
        if problem.entropy.kind is not EntropyKind.CONSTANT:
            raise ConfigError("the exact-solution study needs the constant entropy")
        L = problem.source.L
        cfgs = []
        for h in steps:
            n = round(L / h)
            if abs(n * h - L) > 1e-9 * L:
                raise ConfigError(f"h={h:g} does not divide L={L:g}")
            cfgs.append(replace(problem, N=n, dt=h, snapshot_every=None))
        errs = _pmap(_pde_exact_row, cfgs, workers)
        return ConvergenceTable.build(("D",), [L / c.N for c in cfgs], steps, {"D": errs}, "exact")

    if reference != "fine":
        raise ConfigError(f"reference must be 'exact' or 'fine', got {reference!r}")
    n = N or DEFAULT_REFERENCE_N
    base = replace(problem, N=n, snapshot_every=None)
    finals = _pmap(_pde_final, [replace(base, dt=d) for d in steps + [dt_ref]], workers)
    ref = finals[-1]
    errs = [rel_l2_error(f, ref) for f in finals[:-1]]
    h = problem.source.L / n
    return ConvergenceTable.build(("D",), [h] * len(steps), steps, {"D": errs}, "fine", dt_ref)

