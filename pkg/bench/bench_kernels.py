"""Compiled vs pure-Python kernels on a few representative inputs.

    python bench/bench_kernels.py [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pathtower import kernels
from pathtower.maps import epi_array
from pathtower.tower import random_epi


def _time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases() -> list[tuple[str, object]]:
    rng = np.random.default_rng(7)
    f = random_epi(rng, 60, 12).vals
    fp = random_epi(rng, 50, 12).vals
    small_f = random_epi(rng, 5, 3).vals
    small_fp = random_epi(rng, 5, 3).vals
    phis = epi_array(6, 4)
    F = np.array([0, 1, 1, 2, 3, 3, 2, 1])
    G = np.array([1, 1, 2, 3, 3, 2, 1, 0])
    P = F[phis % 8] if phis.max() < 8 else F[phis]
    Q = G[phis % 8]
    out = [
        ("fp_walk 60x50", lambda be: kernels.fp_walk(f, fp, -1, -1, -1, -1, 15, 4 * 60 * 50, be)),
        ("oracle_walk 5x5", lambda be: kernels.oracle_walk(small_f, small_fp, -1, -1, -1, -1, 100, be)),
        ("kp_maxdist 4k", lambda be: kernels.kp_maxdist(
            rng.integers(0, 50, 4000), rng.integers(0, 50, 4000), rng.integers(0, 9, 4000), rng.integers(0, 9, 4000), be)),
        ("conju_counts J=6", lambda be: kernels.conju_counts(P, Q, P, Q, 0, be)),
    ]
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    bes = kernels.backends()
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name in bes) + ("     speedup" if "compiled" in bes else ""))
    for name, fn in cases():
        ts = {k: _time(lambda: fn(v), args.repeat) for k, v in bes.items()}
        row = f"{name:<20}" + "".join(f"{ts[k] * 1e3:>10.2f}ms" for k in bes)
        if "compiled" in ts:
            row += f"  {ts['python'] / ts['compiled']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
