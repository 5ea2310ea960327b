"""Compare the compiled and pure-numpy kernels.

    python3 benchmarks/bench_kernels.py [--dims 3 6 10] [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from nilhcf import kernels
from nilhcf.catalog import random_two_step
from nilhcf.conventions import ORDERED_PAIR_WEIGHT as W
from nilhcf.flow import IntegratorConfig, integrate_normalized_flow

CASES = {
    "curvature_matrix": lambda m, A: kernels.curvature_matrix(m, W),
    "pi_action": lambda m, A: kernels.pi_action(A, m),
    "normalized_velocity": lambda m, A: kernels.normalized_velocity(m, W),
}


def bench(dims, repeat):
    rows = []
    for n in dims:
        rng = np.random.default_rng(n)
        m = random_two_step(n, rng).bracket.data
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for name, fn in CASES.items():
            t = {}
            for backend in sorted(kernels.BACKENDS):
                prev = kernels.set_backend(backend)
                try:
                    t[backend] = min(timeit.repeat(lambda: fn(m, A), number=repeat, repeat=3)) / repeat
                finally:
                    kernels.set_backend(prev)
            rows.append((n, name, t))
    return rows


def bench_flow(n, seed=0):
    desc = random_two_step(n, np.random.default_rng(seed), generators=3)
    cfg = IntegratorConfig(t_end=1e3)
    out = {}
    for backend in sorted(kernels.BACKENDS):
        prev = kernels.set_backend(backend)
        try:
            out[backend] = min(timeit.repeat(lambda: integrate_normalized_flow(desc, cfg), number=1, repeat=3))
        finally:
            kernels.set_backend(prev)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", type=int, nargs="+", default=[3, 6, 10])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if "compiled" not in kernels.BACKENDS:
        print("compiled kernels not built; only the python backend is available")
    print(f"{'n':>3} {'kernel':<20} " + " ".join(f"{b:>12}" for b in sorted(kernels.BACKENDS)) + "  speedup")
    for n, name, t in bench(args.dims, args.repeat):
        cols = " ".join(f"{t[b] * 1e6:10.2f}us" for b in sorted(t))
        speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
        print(f"{n:>3} {name:<20} {cols}  {speed:6.1f}x")
    flow = bench_flow(6)
    print("normalized flow, n=6: " + ", ".join(f"{b} {s:.3f}s" for b, s in flow.items()))


if __name__ == "__main__":
    main()
