"""Source/sink distributions and their exact primitives."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Union

import numpy as np

from .entropy import EntropyModel, Phi3Sign
from .errors import ConfigError, NotPointwise


@dataclass(frozen=True)
class LinearSource:
    """``S(x) = m x + q`` on ``[0, L]``.

    The primitive must stay non-negative on the domain unless
    ``allow_negative_primitive`` is set; this is what the reproduction runs need.
    """

    m: float
    q: float
    L: float = 1.0
    allow_negative_primitive: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.m) and math.isfinite(self.q)):
            raise ConfigError(f"m and q must be finite, got m={self.m}, q={self.q}")
        if not self.L > 0:
            raise ConfigError(f"domain length L must be positive, got {self.L}")
        # R(x) = x (m x / 2 + q); the linear factor decides the sign on (0, L]
        if not self.allow_negative_primitive and (
            self.q < 0.0 or self.m * self.L / 2.0 + self.q < 0.0
        ):
            raise ConfigError(
                f"primitive R(x) = m x^2/2 + q x becomes negative on [0, {self.L:g}]; "
                "pass allow_negative_primitive=True to permit"
            )

    @property
    def root(self) -> float | None:
        """Zero of ``S`` strictly inside ``(0, L)``, if any."""
        if self.m == 0.0:
            return None
        r = -self.q / self.m
        return r if 0.0 < r < self.L else None

    def source(self, x):
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        return self.m * x + self.q

    def primitive(self, x):
        x = np.asarray(x, dtype=float) if np.ndim(x) else float(x)
        return self.m * x * x / 2.0 + self.q * x

    def l1_norm(self) -> float:
        """``||S||_{L^1(0, L)}`` in closed form."""
        r = self.root
        if r is None:
            return abs(self.primitive(self.L))
        return abs(self.primitive(r)) + abs(self.primitive(self.L) - self.primitive(r))

    def split_integrals(self, x: float) -> tuple[float, float]:
        """Return ``(int_0^x S+, int_0^x S-)`` exactly."""
        r = -self.q / self.m if self.m != 0.0 else None
        pieces = [(0.0, r), (r, x)] if r is not None and 0.0 < r < x else [(0.0, x)]
        pos = neg = 0.0
        for lo, hi in pieces:
            mass = self.primitive(hi) - self.primitive(lo)
            if self.source(0.5 * (lo + hi)) >= 0.0:
                pos += mass
            else:
                neg -= mass
        return pos, neg

    def to_config(self) -> dict[str, Any]:
        return {"variant": "linear", "m": self.m, "q": self.q, "L": self.L}


@dataclass(frozen=True)
class DeltaPair:
    """``S = a delta(x - x0) - b delta(x - x1)`` on the unit interval."""

    a: float
    b: float
    x0: float
    x1: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"delta weights must be positive, got a={self.a}, b={self.b}")
        if not 0.0 < self.x0 < self.x1 < 1.0:
            raise ConfigError(f"need 0 < x0 < x1 < 1, got x0={self.x0}, x1={self.x1}")

    @property
    def L(self) -> float:
        return 1.0

    def source(self, x):
        raise NotPointwise("a delta source has no pointwise value; use its primitive")

    def primitive(self, x):
        # right-continuous at x1: the plateau a - b starts there
        xa = np.asarray(x, dtype=float)
        out = np.where(xa < self.x0, 0.0, np.where(xa < self.x1, self.a, self.a - self.b))
        return float(out) if out.ndim == 0 else out

    def l1_norm(self) -> float:
        """Total variation of the measure, ``a + b``."""
        return self.a + self.b

    def to_config(self) -> dict[str, Any]:
        return {"variant": "delta_pair", "a": self.a, "b": self.b, "x0": self.x0, "x1": self.x1}


SourceModel = Union[LinearSource, DeltaPair]


def source_from_config(cfg: Mapping[str, Any]) -> SourceModel:
    """Build a source from its config table."""
    cfg = dict(cfg)
    variant = cfg.pop("variant", None)
    try:
        if variant == "linear":
            src = LinearSource(
                m=float(cfg.pop("m")), q=float(cfg.pop("q")), L=float(cfg.pop("L", 1.0))
            )
        elif variant == "delta_pair":
            src = DeltaPair(
                a=float(cfg.pop("a")),
                b=float(cfg.pop("b")),
                x0=float(cfg.pop("x0")),
                x1=float(cfg.pop("x1")),
            )
        else:
            raise ConfigError(f"source.variant must be 'linear' or 'delta_pair', got {variant!r}")
    except KeyError as exc:
        raise ConfigError(f"source.{exc.args[0]} is required for variant {variant!r}") from None
    if cfg:
        raise ConfigError(f"unknown source keys: {sorted(cfg)}")
    return src


def eval_S(src: SourceModel, x):
    return src.source(x)


def eval_R(src: SourceModel, x):
    return src.primitive(x)


@dataclass(frozen=True)
class PositivityVerdict:
    guaranteed: bool
    condition: int | None
    detail: str

    @property
    def status(self) -> str:
        return "GuaranteedPositive" if self.guaranteed else "Inconclusive"

    def to_dict(self) -> dict[str, Any]:
        return {"status": self.status, "condition": self.condition, "detail": self.detail}


def _primitive_sign(src: SourceModel) -> tuple[bool, bool]:
    """Return ``(R >= 0 on domain, R <= 0 on domain)`` decided exactly."""
    if isinstance(src, DeltaPair):
        return src.a >= src.b, False
    q, edge = src.q, src.m * src.L / 2.0 + src.q
    return (q >= 0.0 and edge >= 0.0), (q <= 0.0 and edge <= 0.0)


def _flux_ratio_condition(src: LinearSource, k_minus: float, k_plus: float) -> str | None:
    """Check the weighted positive/negative mass inequality on ``(0, L)``.

    Each partial integral is monotone on either side of the root of ``S``, so
    the extremes of the difference sit at ``0+``, the root and ``L``.
    """
    pts = [src.L] + ([src.root] if src.root is not None else [])
    s0 = src.q if src.q != 0.0 else src.m
    ratio = k_plus / k_minus
    if s0 >= 0.0 and all(p >= ratio * n for p, n in map(src.split_integrals, pts)):
        return f"int S+ >= (K+/K-) int S- with K+/K- = {ratio:.6g}"
    if s0 <= 0.0 and all(p <= n / ratio for p, n in map(src.split_integrals, pts)):
        return f"int S+ <= (K-/K+) int S- with K-/K+ = {1.0 / ratio:.6g}"
    return None


def classify_positivity(src: SourceModel, ent: EntropyModel) -> PositivityVerdict:
    """Decide whether a sufficient condition for ``D > 0`` for all time applies.

    Conditions are tried in order: sign-definite source, signed primitive with a
    matching third-derivative sign, and the K-bounded flux inequality (linear
    sources only). ``Inconclusive`` never asserts that positivity is lost.
    """
    note = ""
    if isinstance(src, LinearSource) and src.L != 1.0:
        note = f" (applied on [0, {src.L:g}], extrapolated from the unit interval)"

    if isinstance(src, LinearSource):
        if src.root is None:
            return PositivityVerdict(True, 1, "S does not change sign on the domain" + note)
    # a delta pair always carries a positive and a negative mass

    r_nonneg, r_nonpos = _primitive_sign(src)
    sign = ent.phi3_sign
    if r_nonneg and sign in (Phi3Sign.NON_NEGATIVE, Phi3Sign.ZERO):
        return PositivityVerdict(True, 2, "R >= 0 on the domain and phi''' >= 0" + note)
    if r_nonpos and sign in (Phi3Sign.NON_POSITIVE, Phi3Sign.ZERO):
        return PositivityVerdict(True, 2, "R <= 0 on the domain and phi''' <= 0" + note)

    if isinstance(src, LinearSource) and ent.k_bounds is not None:
        k_minus, k_plus = ent.k_bounds
        if k_minus is not None and k_plus is not None:
            witness = _flux_ratio_condition(src, k_minus, k_plus)
            if witness is not None:
                return PositivityVerdict(True, 3, witness + note)

    return PositivityVerdict(False, None, "no sufficient positivity condition applies" + note)
