"""Time the hot kernels under the numba and pure-numpy backends.

    python benchmarks/bench_kernels.py [--steps N] [--repeat R]

The first numba call includes compilation; it is reported separately and
excluded from the steady-state figures.
"""
from __future__ import annotations

import argparse
import json
import time

import numpy as np

from pentablanc import _accel
from pentablanc import nsaction as ns
from pentablanc.presets import GENERIC_LENGTHS, blanc_reference
from pentablanc.randdyn import (
    BlancSystem,
    GeneratorDistribution,
    PAIRS_EXT,
    PentagonSystem,
    run_blanc,
    run_lyapunov,
    run_pentagon,
)


def _cases(steps):
    pent = PentagonSystem(GENERIC_LENGTHS, GeneratorDistribution.uniform(PAIRS_EXT))
    C, qs = blanc_reference()
    bl = BlancSystem(C, qs)
    _, A = ns.quotient_rep()
    mats = np.array([a.to_numpy() for a in A], dtype=float)
    lyap_dist = GeneratorDistribution((1, 2, 3), (1, 1, 1))
    return {
        "pentagon": lambda b, n: run_pentagon(pent, n, 0, (0,), backend=b, threads=1),
        "blanc": lambda b, n: run_blanc(bl, n // 10, 0, (0,), backend=b, threads=1),
        "lyapunov": lambda b, n: run_lyapunov(mats, lyap_dist, n, 0, (0,), backend=b, threads=1),
    }


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rows = []
    for name, run in _cases(args.steps).items():
        row = {"kernel": name, "steps": args.steps}
        if _accel.HAVE_NUMBA:
            t0 = time.perf_counter()
            run("numba", 10)
            row["numba_compile_s"] = time.perf_counter() - t0
            row["numba_s"], a = _best(lambda: run("numba", args.steps), args.repeat)
        # the numpy fallback is far slower, so time a shorter run and scale
        n_np = max(args.steps // 20, 100)
        t_np, b = _best(lambda: run("numpy", n_np), 1)
        row["numpy_s"] = t_np * args.steps / n_np
        if "numba_s" in row:
            row["speedup"] = row["numpy_s"] / row["numba_s"]
        rows.append(row)
        print(f"{name:10s} " + " ".join(f"{k}={v:.4g}" for k, v in row.items() if isinstance(v, float)))
    print(json.dumps(rows, indent=2))
    return rows


if __name__ == "__main__":
    main()
