"""Time the compiled kernels against their pure-Python twins.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]``
"""
import argparse
import json
import sys
import timeit

import numpy as np

from lvmzoo import _pykernels

try:
    from lvmzoo import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    a = rng.standard_normal((200, 200))
    spd = a @ a.T + 200 * np.eye(200)
    A = 0.5 * np.eye(4)
    d = 8
    lower = np.tril(rng.standard_normal((d, d)), -1)
    eps = rng.standard_normal((100_000, d))
    return {
        "cholesky_lower (200x200)": ("cholesky_lower", (spd,)),
        "linear_gaussian_rollout (T=20000, dim 4)": (
            "linear_gaussian_rollout", (A, np.zeros(4), rng.standard_normal((20_000, 4)))),
        "iaf_affine_forward (100000x8)": ("iaf_affine_forward", (eps, np.zeros(d), lower, np.ones(d))),
        "iaf_affine_inverse (100000x8)": ("iaf_affine_inverse", (eps, np.zeros(d), lower, np.ones(d))),
        "stick_breaking (10000x200)": ("stick_breaking", (rng.beta(1.0, 2.0, (10_000, 200)),)),
    }


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this file")
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled kernels not built; reinstall with Cython available", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<44}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for label, (name, inputs) in cases(rng).items():
        py = best_time(getattr(_pykernels, name), inputs, args.repeat)
        cy = best_time(getattr(_kernels, name), inputs, args.repeat)
        rows.append({"kernel": label, "python_s": py, "cython_s": cy, "speedup": py / cy})
        print(f"{label:<44}{1e3 * py:>12.3f}{1e3 * cy:>12.3f}{py / cy:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
