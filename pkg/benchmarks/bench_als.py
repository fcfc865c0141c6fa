"""Timing comparison of the two ALS sweep kernels.

Both backends run the same sweeps on the same planted-rank tensors with
identical starting factors, so their residuals must agree to near
machine precision; the script checks that while it times them.  Run

    python benchmarks/bench_als.py

from the repository root after an editable install.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from schmidt_measure._kernels import als_cy, als_py

CASES = (
    ("four qubits", (2, 2, 2, 2), 4),
    ("five qubits", (2, 2, 2, 2, 2), 6),
    ("six qubits", (2,) * 6, 4),
    ("three qutrits", (3, 3, 3), 5),
    ("three ququarts", (4, 4, 4), 6),
)

MAX_ITERS = 500
EPS_FIT = 1e-9
NORM_CAP = 1e3
STALL_RTOL = 1e-4
STALL_WINDOW = 50


def planted_instance(shape, rank, rng):
    """A unit-norm sum of ``rank`` random product terms plus a start."""
    k = len(shape)
    ground = [rng.standard_normal((d, rank))
              + 1j * rng.standard_normal((d, rank)) for d in shape]
    tensor = np.zeros(shape, dtype=np.complex128)
    for r in range(rank):
        term = ground[0][:, r]
        for f in ground[1:]:
            term = np.multiply.outer(term, f[:, r])
        tensor += term
    tensor /= np.linalg.norm(tensor)
    init = [rng.standard_normal((d, rank))
            + 1j * rng.standard_normal((d, rank)) for d in shape]
    return tensor, init


def run_backend(module, tensor, init, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        started = time.perf_counter()
        out = module.als_sweeps(tensor, [f.copy() for f in init],
                                MAX_ITERS, EPS_FIT, NORM_CAP,
                                STALL_RTOL, STALL_WINDOW)
        best = min(best, time.perf_counter() - started)
    _, _, residual, sweeps, status = out
    return best, residual, sweeps, status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="compare the python and cython ALS kernels")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed runs per case, best one counts")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true",
                        help="emit one JSON document instead of a table")
    args = parser.parse_args(argv)

    if als_cy is None:
        print("compiled kernel unavailable; nothing to compare against",
              file=sys.stderr)
        return 1

    rng = np.random.default_rng(args.seed)
    rows = []
    for label, shape, rank in CASES:
        tensor, init = planted_instance(shape, rank, rng)
        t_py, res_py, sweeps_py, status_py = run_backend(
            als_py, tensor, init, args.repeats)
        t_cy, res_cy, sweeps_cy, status_cy = run_backend(
            als_cy, tensor, init, args.repeats)
        if sweeps_py != sweeps_cy or status_py != status_cy or \
                abs(res_py - res_cy) > 1e-9:
            print(f"backend mismatch on {label!r}: "
                  f"python ({res_py:.3e}, {sweeps_py}, {status_py}) vs "
                  f"cython ({res_cy:.3e}, {sweeps_cy}, {status_cy})",
                  file=sys.stderr)
            return 1
        rows.append({"case": label, "shape": "x".join(map(str, shape)),
                     "rank": rank, "sweeps": sweeps_py,
                     "python_ms": 1e3 * t_py, "cython_ms": 1e3 * t_cy,
                     "speedup": t_py / t_cy})

    if args.json:
        print(json.dumps({"repeats": args.repeats, "seed": args.seed,
                          "rows": rows}, indent=2, sort_keys=True))
        return 0

    header = (f"{'case':<16} {'shape':<12} {'rank':>4} {'sweeps':>6} "
              f"{'python':>10} {'cython':>10} {'speedup':>8}")
    print(header)
    print("-" * len(header))
    for row in rows:
        print(f"{row['case']:<16} {row['shape']:<12} {row['rank']:>4} "
              f"{row['sweeps']:>6} {row['python_ms']:>8.2f}ms "
              f"{row['cython_ms']:>8.2f}ms {row['speedup']:>7.1f}x")
    geo = float(np.exp(np.mean([np.log(r["speedup"]) for r in rows])))
    print(f"geometric-mean speedup: {geo:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
