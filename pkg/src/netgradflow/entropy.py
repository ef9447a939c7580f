"""Second derivatives of the entropy generating functions.

The reduced one-dimensional dynamics only ever see ``phi''(u)``, so this module
does not evaluate the entropy itself or its first derivative. The sign of the
third derivative is carried as declared metadata.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DomainViolation


class EntropyKind(enum.Enum):
    CONSTANT = "constant"
    EXP_NEG = "exp_neg"
    FISHER = "fisher"
    SIN_RATIONAL = "sin_rational"
    SQUARE = "square"


class Phi3Sign(enum.Enum):
    """Declared sign of the third derivative on the admissible domain."""

    NON_NEGATIVE = "non_negative"
    NON_POSITIVE = "non_positive"
    ZERO = "zero"
    INDEFINITE = "indefinite"
    UNKNOWN = "unknown"


# integer codes shared with the compiled kernels
KIND_CODES = {
    EntropyKind.CONSTANT: 0,
    EntropyKind.EXP_NEG: 1,
    EntropyKind.FISHER: 2,
    EntropyKind.SIN_RATIONAL: 3,
    EntropyKind.SQUARE: 4,
}

_UNSET: Any = object()


def _default_phi3_sign(kind: EntropyKind) -> Phi3Sign:
    return {
        EntropyKind.CONSTANT: Phi3Sign.ZERO,
        EntropyKind.EXP_NEG: Phi3Sign.NON_POSITIVE,
        EntropyKind.FISHER: Phi3Sign.NON_POSITIVE,
        EntropyKind.SIN_RATIONAL: Phi3Sign.INDEFINITE,
        EntropyKind.SQUARE: Phi3Sign.INDEFINITE,
    }[kind]


def _default_k_bounds(kind: EntropyKind, sigma: float) -> tuple[float | None, float | None] | None:
    if kind is EntropyKind.CONSTANT:
        return (1.0, 1.0)
    if kind is EntropyKind.SIN_RATIONAL and sigma >= 1.0:
        # sin(u) + sigma >= 0 keeps the denominator >= 1; no positive lower bound as |u| grows
        return (None, 1.0)
    return None


@dataclass(frozen=True)
class EntropyModel:
    """An entropy variant identified by its second derivative.

    ``k_bounds`` is ``(K_minus, K_plus)``; either entry may be ``None`` when the
    corresponding uniform bound does not exist. Both default from ``kind``.
    """

    kind: EntropyKind
    sigma: float = 2.0
    k_bounds: tuple[float | None, float | None] | None = field(default=_UNSET)
    phi3_sign: Phi3Sign = field(default=_UNSET)

    def __post_init__(self) -> None:
        if not isinstance(self.kind, EntropyKind):
            object.__setattr__(self, "kind", EntropyKind(self.kind))
        if not math.isfinite(self.sigma):
            raise ConfigError(f"sigma must be finite, got {self.sigma}")
        if self.k_bounds is _UNSET:
            object.__setattr__(self, "k_bounds", _default_k_bounds(self.kind, self.sigma))
        if self.phi3_sign is _UNSET:
            object.__setattr__(self, "phi3_sign", _default_phi3_sign(self.kind))
        elif not isinstance(self.phi3_sign, Phi3Sign):
            object.__setattr__(self, "phi3_sign", Phi3Sign(self.phi3_sign))
        if self.k_bounds is not None:
            for k in self.k_bounds:
                if k is not None and not k > 0:
                    raise ConfigError(f"k_bounds entries must be positive, got {self.k_bounds}")

    @classmethod
    def constant(cls) -> EntropyModel:
        return cls(EntropyKind.CONSTANT)

    @classmethod
    def exp_neg(cls) -> EntropyModel:
        return cls(EntropyKind.EXP_NEG)

    @classmethod
    def fisher(cls) -> EntropyModel:
        return cls(EntropyKind.FISHER)

    @classmethod
    def sin_rational(cls, sigma: float = 2.0) -> EntropyModel:
        return cls(EntropyKind.SIN_RATIONAL, sigma=sigma)

    @classmethod
    def square(cls) -> EntropyModel:
        return cls(EntropyKind.SQUARE)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> EntropyModel:
        """Build from a ``{kind, sigma?}`` mapping."""
        cfg = dict(cfg)
        try:
            kind = EntropyKind(cfg.pop("kind"))
        except KeyError:
            raise ConfigError("entropy.kind is required") from None
        except ValueError:
            names = ", ".join(k.value for k in EntropyKind)
            raise ConfigError(f"entropy.kind must be one of {names}") from None
        kwargs: dict[str, Any] = {}
        if "sigma" in cfg:
            if kind is not EntropyKind.SIN_RATIONAL:
                raise ConfigError("entropy.sigma only applies to kind 'sin_rational'")
            kwargs["sigma"] = float(cfg.pop("sigma"))
        if "phi3_sign" in cfg:
            kwargs["phi3_sign"] = Phi3Sign(cfg.pop("phi3_sign"))
        if cfg:
            raise ConfigError(f"unknown entropy keys: {sorted(cfg)}")
        return cls(kind, **kwargs)

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is EntropyKind.SIN_RATIONAL:
            out["sigma"] = self.sigma
        return out

    @property
    def domain_lower(self) -> float:
        """Open lower bound of admissible ``u``."""
        return -1.0 if self.kind is EntropyKind.FISHER else -math.inf

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def phi2(self, u):
        return phi2(self, u)

    def describe(self) -> str:
        return {
            EntropyKind.CONSTANT: "phi''(u) = 1",
            EntropyKind.EXP_NEG: "phi''(u) = exp(-u)",
            EntropyKind.FISHER: "phi''(u) = 1/(u+1)",
            EntropyKind.SIN_RATIONAL: f"phi''(u) = 1/(u^2 (sin u + {self.sigma:g}) + 1)",
            EntropyKind.SQUARE: "phi''(u) = u^2",
        }[self.kind]


def phi2(model: EntropyModel, u):
    """Evaluate ``phi''`` at a scalar or array ``u``.

    Raises :class:`DomainViolation` if any ``u`` lies at or below the model's
    domain bound, which signals that a run has left the entropy's validity region.
    """
    arr = np.asarray(u, dtype=float)
    if model.kind is EntropyKind.FISHER and np.any(arr <= -1.0):
        bad = float(np.min(arr))
        raise DomainViolation(f"Fisher entropy requires u > -1, got u = {bad!r}")

    kind = model.kind
    if kind is EntropyKind.CONSTANT:
        out = np.ones_like(arr)
    elif kind is EntropyKind.EXP_NEG:
        out = np.exp(-arr)
    elif kind is EntropyKind.FISHER:
        out = 1.0 / (arr + 1.0)
    elif kind is EntropyKind.SIN_RATIONAL:
        out = 1.0 / (arr * arr * (np.sin(arr) + model.sigma) + 1.0)
    else:
        out = arr * arr

    if out.ndim == 0:
        return float(out)
    return out
