"""Time the compiled integrator kernel against the pure-Python twin.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each case runs the same built-in field on both backends, checks that the
trajectories agree bit for bit, and reports the best wall time.
"""
import argparse
import math
import sys
import timeit

import numpy as np

from soliton import kernels
from soliton.ode import IntegratorConfig

CFG = IntegratorConfig()
ARGS = (CFG.abs_tol, CFG.rel_tol, CFG.max_step, CFG.min_step,
        CFG.blowup_threshold)

# name, kind, n, eps, r0, y0, r1
CASES = [
    ("psi backward [40 -> 0], n=2", kernels.KIND_PSI, 2, 0.0,
     40.0, math.exp(-40.0), 0.0),
    ("phi from 1/k, k=256, n=3", kernels.KIND_PHI, 3, 0.0,
     1 / 256, 1 / 768, 2.0),
    ("phi_eps, eps=2^-10, n=2", kernels.KIND_PHI_EPS, 2, 2.0 ** -10,
     0.0, 0.0, 2.0),
    ("y' = 1 + y^2 on [0, 1.5]", kernels.KIND_PHI_EPS, 1, 1.0,
     0.0, 0.0, 1.5),
]


def run(case, backend):
    _, kind, n, eps, r0, y0, r1 = case
    return kernels.dopri_builtin(kind, n, eps, r0, y0, r1, *ARGS,
                                 backend=backend)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled core not built; run pip install -e . first")
        return 1
    print(f"{'case':34s} {'steps':>6s} {'cython ms':>10s} "
          f"{'python ms':>10s} {'speedup':>8s}")
    for case in CASES:
        a, b = run(case, "cython"), run(case, "python")
        same = all(np.array_equal(x, y) for x, y in zip(a[:4], b[:4])) \
            and a[4] == b[4]
        times = {}
        for be in ("cython", "python"):
            t = timeit.Timer(lambda: run(case, be))
            number = 20 if be == "cython" else 2
            times[be] = min(t.repeat(args.repeat, number)) / number * 1e3
        print(f"{case[0]:34s} {len(a[0]):6d} {times['cython']:10.3f} "
              f"{times['python']:10.3f} "
              f"{times['python'] / times['cython']:7.1f}x"
              + ("" if same else "  MISMATCH"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
