"""Config-driven command line entry point.

Exit status: 0 when a run completes or a verdict/table is produced, 2 when a
run touches down (artifacts are still written), 1 on any error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .delta_solver import DeltaRunConfig, DeltaState, check_delta_conditions, run_delta
from .diagnostics import StudyAborted, convergence_study
from .entropy import EntropyModel
from .errors import ConfigError, NetGradFlowError
from .pde_solver import PdeRunConfig, min_D_sweep, run
from .source import DeltaPair, LinearSource, classify_positivity, source_from_config

logger = logging.getLogger("netgradflow")

OUTPUT_DIR_ENV = "NETGRADFLOW_OUTPUT_DIR"
MODES = ("pde", "delta", "convergence", "sweep-min-d", "check-conditions")
EXIT_OK, EXIT_ERROR, EXIT_TOUCHDOWN = 0, 1, 2

_num = (int, float)
SCHEMA: dict[str, Any] = {
    "mode": str,
    "backend": str,
    "source": {"variant": str, "m": _num, "q": _num, "L": _num, "a": _num, "b": _num, "x0": _num, "x1": _num},
    "entropy": {"kind": str, "sigma": _num},
    "grid": {"N": int},
    "time": {"dt": _num, "t_fin": _num, "snapshot_every": int, "floor": _num},
    "initial": {"D": (int, float, list), "D1": _num, "D2": _num, "D_I0": _num},
    "output": {"dir": str, "format": str},
    "convergence": {"refinements": list, "reference": str, "dt_ref": _num, "N": int, "workers": int},
    "sweep": {"dts": list, "workers": int},
}


def _type_name(t) -> str:
    ts = t if isinstance(t, tuple) else (t,)
    return " or ".join({int: "integer", float: "number", str: "string", list: "array"}[x] for x in ts)


def validate(cfg: Mapping[str, Any]) -> None:
    """Reject unknown keys and mistyped values before any computation."""
    for key, val in cfg.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown top-level key {key!r}")
        spec = SCHEMA[key]
        if isinstance(spec, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{key}: expected a table")
            for sub, v in val.items():
                if sub not in spec:
                    raise ConfigError(f"unknown key {key}.{sub}")
                if isinstance(v, bool) or not isinstance(v, spec[sub]):
                    raise ConfigError(f"{key}.{sub}: expected {_type_name(spec[sub])}, got {v!r}")
        elif isinstance(val, bool) or not isinstance(val, spec):
            raise ConfigError(f"{key}: expected {_type_name(spec)}, got {val!r}")
    mode = cfg.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {mode!r}")
    fmt = cfg.get("output", {}).get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"output.format must be 'csv' or 'json', got {fmt!r}")


def load_config(path: str | os.PathLike) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def apply_override(cfg: dict[str, Any], assignment: str) -> None:
    """Apply ``a.b=value``; the value is read as a TOML literal, else kept as a string."""
    key, sep, raw = assignment.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {p!r} is not a table")
    node[parts[-1]] = value


def _require(cfg: Mapping[str, Any], section: str, key: str):
    try:
        return cfg[section][key]
    except KeyError:
        raise ConfigError(f"{section}.{key} is required for mode {cfg['mode']!r}") from None


def _source(cfg) -> LinearSource | DeltaPair:
    if "source" not in cfg:
        raise ConfigError(f"a [source] table is required for mode {cfg['mode']!r}")
    return source_from_config(cfg["source"])


def _entropy(cfg) -> EntropyModel:
    if "entropy" not in cfg:
        raise ConfigError(f"an [entropy] table is required for mode {cfg['mode']!r}")
    return EntropyModel.from_config(cfg["entropy"])


def build_pde(cfg: Mapping[str, Any]) -> PdeRunConfig:
    src = _source(cfg)
    if not isinstance(src, LinearSource):
        raise ConfigError("source.variant must be 'linear' for this mode")
    t, init = cfg.get("time", {}), cfg.get("initial", {})
    D = init.get("D", 1.0)
    return PdeRunConfig(
        N=_require(cfg, "grid", "N"),
        dt=float(_require(cfg, "time", "dt")),
        t_fin=float(_require(cfg, "time", "t_fin")),
        source=src,
        entropy=_entropy(cfg),
        D_init=np.asarray(D, dtype=float) if isinstance(D, list) else float(D),
        snapshot_every=t.get("snapshot_every"),
        floor=float(t.get("floor", 1e-10)),
        backend=cfg.get("backend"),
    )


def build_delta(cfg: Mapping[str, Any]) -> DeltaRunConfig:
    src = _source(cfg)
    if not isinstance(src, DeltaPair):
        raise ConfigError("source.variant must be 'delta_pair' for this mode")
    if "grid" in cfg:
        raise ConfigError("grid is not used by delta runs")
    t, init = cfg.get("time", {}), cfg.get("initial", {})
    if "D" in init or "floor" in t:
        raise ConfigError("delta runs take initial.D1/D2/D_I0 and no time.floor")
    return DeltaRunConfig(
        source=src,
        entropy=_entropy(cfg),
        D1_0=float(init.get("D1", 1.0)),
        D2_0=float(init.get("D2", 1.0)),
        dt=float(_require(cfg, "time", "dt")),
        t_fin=float(_require(cfg, "time", "t_fin")),
        snapshot_every=t.get("snapshot_every"),
        D_I0=float(init.get("D_I0", 1.0)),
        backend=cfg.get("backend"),
    )


# -- artifact writers -------------------------------------------------------


def _g(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def write_pde_trajectory(out: Path, rec, fmt: str) -> None:
    x = rec.grid.nodes
    if fmt == "json":
        _write_json(out / "trajectory.json", {
            "x": x.tolist(),
            "t": [s.t for s in rec.snapshots],
            "D": [s.D.tolist() for s in rec.snapshots],
            "u": [s.u.tolist() for s in rec.snapshots],
        })
        return
    rows = (
        (_g(s.t), _g(xi), _g(di), _g(ui))
        for s in rec.snapshots
        for xi, di, ui in zip(x, s.D, s.u)
    )
    _write_csv(out / "trajectory.csv", ("t", "x", "D", "u"), rows)


def write_delta_trajectory(out: Path, tr, fmt: str) -> None:
    cols = {"t": tr.t, "D1": tr.D1, "D2": tr.D2, "phi2_u_x1": tr.phi2_u_x1}
    if fmt == "json":
        _write_json(out / "trajectory.json", {k: v.tolist() for k, v in cols.items()})
        return
    _write_csv(out / "trajectory.csv", tuple(cols), (tuple(map(_g, r)) for r in zip(*cols.values())))


# -- modes ------------------------------------------------------------------


def _mode_pde(cfg, out: Path, fmt: str) -> tuple[int, dict]:
    pc = build_pde(cfg)
    verdict = classify_positivity(pc.source, pc.entropy)
    rec = run(pc)
    write_pde_trajectory(out, rec, fmt)
    summary = {
        "backend": rec.backend,
        "steps": rec.steps,
        "termination": rec.termination.to_dict(),
        "series": {"t": rec.times.tolist(), "energy": rec.energies.tolist(), "min_D": rec.min_D.tolist()},
        "verdicts": {"positivity": verdict.to_dict()},
    }
    logger.info("%s after %d steps; positivity verdict %s", rec.termination.kind, rec.steps, verdict.status)
    return (EXIT_TOUCHDOWN if rec.touched_down else EXIT_OK), summary


def _mode_delta(cfg, out: Path, fmt: str) -> tuple[int, dict]:
    dc = build_delta(cfg)
    verdict = check_delta_conditions(dc.source, dc.entropy, dc.state0)
    tr = run_delta(dc)
    write_delta_trajectory(out, tr, fmt)
    summary = {
        "backend": tr.backend,
        "steps": tr.steps,
        "D_I0": dc.D_I0,
        "termination": tr.termination.to_dict(),
        "series": {
            "t": tr.t.tolist(),
            "energy": tr.energies().tolist(),
            "min_D": np.minimum(dc.D_I0, np.minimum(tr.D1, tr.D2)).tolist(),
        },
        "verdicts": {
            "delta_conditions": verdict.to_dict(),
            "positivity": classify_positivity(dc.source, dc.entropy).to_dict(),
        },
    }
    logger.info("%s after %d steps; delta verdict %s", tr.termination.kind, tr.steps, verdict.status)
    return (EXIT_TOUCHDOWN if tr.touched_down else EXIT_OK), summary


def _mode_convergence(cfg, out: Path, fmt: str) -> tuple[int, dict]:
    conv = cfg.get("convergence", {})
    refinements = _require(cfg, "convergence", "refinements")
    src = _source(cfg)
    if isinstance(src, DeltaPair):
        problem = build_delta(cfg)
        reference = conv.get("reference", "fine")
    else:
        reference = conv.get("reference", "exact")
        # the exact study sets N and dt per row; placeholders keep the config valid
        if reference == "exact":
            cfg = {**cfg, "grid": {"N": 1, **cfg.get("grid", {})}}
            cfg["time"] = {"dt": refinements[0], **cfg.get("time", {})}
        problem = build_pde(cfg)
    try:
        table = convergence_study(
            problem, refinements, reference=reference, dt_ref=conv.get("dt_ref"),
            N=conv.get("N"), workers=conv.get("workers"),
        )
    except StudyAborted as exc:
        term = exc.termination.to_dict()
        return EXIT_TOUCHDOWN, {"termination": term, "error": {"type": "StudyAborted", "message": str(exc)}}
    (out / "convergence.csv").write_text(table.to_csv())
    logger.info("%s", table.summary())
    return EXIT_OK, {
        "reference": table.reference,
        "dt_ref": table.dt_ref,
        "rows": [{"h": r.h, "dt": r.dt, "errors": r.errors, "orders": r.orders} for r in table.rows],
    }


def _mode_sweep(cfg, out: Path, fmt: str) -> tuple[int, dict]:
    sw = cfg.get("sweep", {})
    dts = _require(cfg, "sweep", "dts")
    pc = build_pde({**cfg, "time": {"dt": dts[0], **cfg.get("time", {})}})
    rows = min_D_sweep(pc, dts, workers=sw.get("workers"))
    _write_csv(
        out / "sweep.csv", ("dt", "t_reached", "min_D", "termination"),
        ((_g(r.dt), _g(r.t_reached), _g(r.min_D), r.termination) for r in rows),
    )
    mins = [r.min_D for r in rows]
    decreasing = all(b < a for a, b in zip(mins, mins[1:]))
    logger.info("min D across dt: %s (strictly decreasing: %s)", mins, decreasing)
    return EXIT_OK, {
        "rows": [r.__dict__ for r in rows],
        "min_D_strictly_decreasing": decreasing,
    }


def _mode_check(cfg, out: Path, fmt: str) -> tuple[int, dict]:
    src, ent = _source(cfg), _entropy(cfg)
    verdicts = {"positivity": classify_positivity(src, ent).to_dict()}
    if isinstance(src, DeltaPair):
        init = cfg.get("initial", {})
        state0 = DeltaState(float(init["D1"]), float(init["D2"]), src) if {"D1", "D2"} <= init.keys() else None
        verdicts["delta_conditions"] = check_delta_conditions(src, ent, state0).to_dict()
    for name, v in verdicts.items():
        logger.info("%s: %s", name, v["status"])
    return EXIT_OK, {"verdicts": verdicts}


_MODES = {
    "pde": _mode_pde,
    "delta": _mode_delta,
    "convergence": _mode_convergence,
    "sweep-min-d": _mode_sweep,
    "check-conditions": _mode_check,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netgradflow", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="TOML run description")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry by dotted key; repeatable")
    p.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return p


def _output_dir(cfg: Mapping[str, Any]) -> Path:
    """Resolve the artifact directory before validation so errors can be recorded."""
    output = cfg.get("output")
    configured = output.get("dir") if isinstance(output, dict) else None
    return Path(os.environ.get(OUTPUT_DIR_ENV) or (configured if isinstance(configured, str) else "netgradflow_out"))


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")

    out: Path | None = None
    cfg: dict[str, Any] = {}
    try:
        cfg = load_config(args.config)
        for ov in args.overrides:
            apply_override(cfg, ov)
        out = _output_dir(cfg)
        out.mkdir(parents=True, exist_ok=True)
        validate(cfg)
        output = cfg.get("output", {})
        code, summary = _MODES[cfg["mode"]](cfg, out, output.get("format", "csv"))
    except (NetGradFlowError, ValueError, ArithmeticError) as exc:
        logger.error("error: %s", exc)
        if out is not None:
            _write_json(out / "summary.json", {
                "mode": cfg.get("mode"),
                "config": cfg,
                "error": {"type": type(exc).__name__, "message": str(exc)},
            })
        return EXIT_ERROR

    _write_json(out / "summary.json", {"mode": cfg["mode"], "config": cfg, **summary})
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
