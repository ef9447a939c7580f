"""Backend selection for the stepping kernels.

The compiled extension is preferred when importable. Set
``NETGRADFLOW_BACKEND=python`` to force the numpy fallback, or ``compiled`` to
fail loudly when the extension is missing.
"""
from __future__ import annotations

import os

from . import _pykernels
from ._pykernels import (  # noqa: F401  re-exported status codes
    BELOW_FLOOR,
    DOMAIN_VIOLATION,
    NONPOSITIVE_STAGE,
    OK,
    SINGULAR_STAGE,
)

STATUS_NAMES = {
    OK: "ok",
    BELOW_FLOOR: "below_floor",
    NONPOSITIVE_STAGE: "nonpositive_stage",
    SINGULAR_STAGE: "singular_stage",
    DOMAIN_VIOLATION: "domain_violation",
}

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: environment, then best available)."""
    name = name or os.environ.get("NETGRADFLOW_BACKEND") or ("compiled" if _ckernels else "python")
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ImportError(
            f"kernel backend {name!r} is not available (have: {', '.join(available_backends())})"
        ) from None


def backend_name(module) -> str:
    return next(k for k, v in _BACKENDS.items() if v is module)
