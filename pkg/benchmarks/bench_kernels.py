"""Compare the compiled and pure-Python kernel backends.

Run with ``python3 benchmarks/bench_kernels.py``. Each case is timed a few
times per backend; the best wall time is reported together with the maximum
difference between the final states.
"""
import argparse
import time

import numpy as np

from netgradflow import kernels
from netgradflow.delta_solver import DeltaRunConfig, run_delta
from netgradflow.entropy import EntropyModel
from netgradflow.pde_solver import PdeRunConfig, run
from netgradflow.source import DeltaPair, LinearSource


def _cases():
    src = LinearSource(-1.98, 1.0)
    yield "pde N=1000 fisher 2000 steps", lambda b: run(
        PdeRunConfig(N=1000, dt=1e-4, t_fin=0.2, source=src, entropy=EntropyModel.fisher(), D_init=1.0, backend=b)
    ).final.D
    yield "pde N=200 sin-rational 5000 steps", lambda b: run(
        PdeRunConfig(N=200, dt=1e-4, t_fin=0.5, source=src, entropy=EntropyModel.sin_rational(2.0), backend=b)
    ).final.D
    pair = DeltaPair(1.0, 0.9, 0.1, 0.9)
    yield "delta square 100000 steps", lambda b: np.array(
        (lambda tr: (tr.D1[-1], tr.D2[-1]))(
            run_delta(DeltaRunConfig(pair, EntropyModel.square(), 1.0, 1.0, dt=1e-5, t_fin=1.0, backend=b))
        )
    )


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} available; build the extension with `python3 setup.py build_ext --inplace`")
    print(f"{'case':38s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup   max |diff|")
    for name, fn in _cases():
        best, finals = {}, {}
        for b in backends:
            times = []
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                finals[b] = fn(b)
                times.append(time.perf_counter() - t0)
            best[b] = min(times)
        cols = " ".join(f"{best[b]:11.4f}s" for b in backends)
        if len(backends) > 1:
            ref, other = backends[0], backends[1]
            speed = max(best.values()) / min(best.values())
            diff = float(np.max(np.abs(finals[ref] - finals[other])))
            print(f"{name:38s} {cols} {speed:8.1f}x   {diff:.2e}")
        else:
            print(f"{name:38s} {cols}")


if __name__ == "__main__":
    main()
