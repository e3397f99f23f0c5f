#!/usr/bin/env python3
"""Benchmark the hot kernels under the numba and numpy backends.

Run directly for the current backend, or with ``--both`` to spawn a child
process per backend and print a comparison table:

    python benchmarks/bench_kernels.py --both
    KGEODESICS_BACKEND=numpy python benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload():
    from kgeodesics import _kernels as K

    a2, c2 = 1.0, 0.25
    y0 = np.array([1.0, 0.0, 0.0, 0.0, 0.8, 0.6])
    y0[3:] /= np.linalg.norm(y0[3:])
    yout = np.empty(6)
    results = {}

    t0 = time.perf_counter()
    K.warm_up()
    results["warmup_s"] = time.perf_counter() - t0

    n_shoot = 200 if K.BACKEND == "numba" else 5
    t0 = time.perf_counter()
    for _ in range(n_shoot):
        K.shoot_last(a2, c2, y0, np.pi, 1e-10, yout)
    results["shoot_pi_ms"] = (time.perf_counter() - t0) / n_shoot * 1e3

    q = np.array([1.0, 0.0, 0.0])
    e1 = np.array([0.0, 1.0, 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    # target near the far side of the c=0.5 spheroid
    p = np.array([-0.9, 0.3, 0.5 * 0.31623])
    n_dirs = 256 if K.BACKEND == "numba" else 16
    out_t = np.empty(n_dirs)
    out_d = np.empty(n_dirs)
    t0 = time.perf_counter()
    K.multistart_probe(a2, c2, q, e1, e2, p[0], p[1], p[2], n_dirs, 4.0, 1e-8, 0.06, out_t, out_d)
    results["probe_per_dir_ms"] = (time.perf_counter() - t0) / n_dirs * 1e3

    cap = 65536
    t0 = time.perf_counter()
    n_jac = 20 if K.BACKEND == "numba" else 2
    for _ in range(n_jac):
        K.jacobi_spheroid(a2, c2, y0, np.pi, 1e-10, np.empty(cap), np.empty(cap), np.empty(cap))
    results["jacobi_pi_ms"] = (time.perf_counter() - t0) / n_jac * 1e3

    results["backend"] = K.BACKEND
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--both", action="store_true", help="compare numba and numpy backends")
    parser.add_argument("--json", action="store_true", help="emit raw JSON")
    args = parser.parse_args()

    if args.both:
        rows = {}
        for backend in ("numba", "numpy"):
            env = dict(os.environ, KGEODESICS_BACKEND=backend)
            out = subprocess.run(
                [sys.executable, os.path.abspath(__file__), "--json"],
                env=env,
                capture_output=True,
                text=True,
                check=True,
            )
            rows[backend] = json.loads(out.stdout)
        keys = ["shoot_pi_ms", "probe_per_dir_ms", "jacobi_pi_ms"]
        print(f"{'kernel':<20}{'numba (ms)':>14}{'numpy (ms)':>14}{'speedup':>10}")
        for k in keys:
            a, b = rows["numba"][k], rows["numpy"][k]
            print(f"{k:<20}{a:>14.4f}{b:>14.4f}{b / a:>10.1f}x")
        return

    res = workload()
    if args.json:
        print(json.dumps(res))
    else:
        for k, v in res.items():
            print(f"{k}: {v}")


if __name__ == "__main__":
    main()
