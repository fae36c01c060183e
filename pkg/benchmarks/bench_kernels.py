"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each kernel runs on identical inputs in both backends; the table lists the
best wall time of ``--repeat`` runs, the speedup and the largest deviation
between the two outputs.
"""
import argparse
import json
import math
import time

import numpy as np

from qcholder import _pykernels as py
from qcholder.packing import D0_RADIUS, tile_pattern

try:
    from qcholder import _ckernels as cy
except ImportError:
    cy = None


def best(fn, repeat):
    t = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        t = min(t, time.perf_counter() - t0)
    return t, out


def deviation(a, b):
    if isinstance(a, tuple):
        return max(deviation(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind in "biu":
        return float(np.sum(a != b))
    scale = np.maximum(np.abs(a), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def cases(n):
    rng = np.random.default_rng(1)
    y = (0.5 * np.sqrt(rng.random(n))) * np.exp(2j * np.pi * rng.random(n))
    lr = np.full(n, math.log(0.5))
    ls = np.full(n, math.log(0.05))
    pat = tile_pattern(12)
    wx, wy = rng.random(n), rng.random(n)
    args = (12, pat.keys[:13], pat.level_start, D0_RADIUS)
    return [
        ("stretch_offsets", lambda m: m.stretch_offsets(y, lr, ls, 2.0)),
        ("unstretch_offsets", lambda m: m.unstretch_offsets(y, lr, ls, 2.0)),
        ("stretch_log_jacobian", lambda m: m.stretch_log_jacobian(y, lr, ls, 2.0)),
        ("pattern_locate", lambda m: m.pattern_locate(wx, wy, *args)),
        ("count_interior_tiles", lambda m: m.count_interior_tiles(2e-6, 0.3e-6, 0.7e-6)),
        ("column_violations", lambda m: m.column_violations(2e-6, 0.3e-6, 0.7e-6)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10 ** 6, help="points per kernel call")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None)
    a = ap.parse_args()
    if cy is None:
        print("compiled backend not built; only timing the NumPy kernels")
    rows = []
    print(f"{'kernel':24s} {'numpy s':>10s} {'cython s':>10s} {'speedup':>8s} {'max dev':>10s}")
    for name, fn in cases(a.n):
        tp, op = best(lambda: fn(py), a.repeat)
        if cy is not None:
            tc, oc = best(lambda: fn(cy), a.repeat)
            dev = deviation(op, oc)
        else:
            tc, dev = math.nan, math.nan
        rows.append({"kernel": name, "numpy": tp, "cython": tc, "speedup": tp / tc, "deviation": dev})
        print(f"{name:24s} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f} {dev:10.2e}")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
