#!/usr/bin/env python3
"""Benchmark the compiled extension core against the pure-numpy fallback.

The hot path is the pairwise boundary-integral velocity evaluation, which is
O(N^2) in the node count and dominates every evolution run.  Backend
selection happens once at import time via QGPATCH_BACKEND, so each
measurement runs in a fresh subprocess with that variable set; the parent
process collects the timings and prints a comparison table.

Usage:
    python3 benchmarks/compare_backends.py [--sizes 256,1024,4096] [--repeats 5]

Worker count is pinned to 1 so the table compares single-thread kernel code,
not thread scheduling.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _wobbly_contour(node_count):
    import numpy as np

    from qgpatch.contour import Contour

    rng = np.random.default_rng(7)
    alphas = 2.0 * np.pi * np.arange(node_count) / node_count
    radius = np.full(node_count, 1.0)
    for order in range(1, 5):
        amp_cos, amp_sin = 0.12 * rng.uniform(-1.0, 1.0, size=2) / order
        radius += amp_cos * np.cos(order * alphas) + amp_sin * np.sin(order * alphas)
    nodes = np.stack([radius * np.cos(alphas), radius * np.sin(alphas)], axis=1)
    return Contour(nodes)


def measure(sizes, repeats):
    """Child-process entry: time cde_velocity per size, emit JSON on stdout."""
    from qgpatch._backend import ACTIVE_BACKEND
    from qgpatch.dynamics import KernelMode, PatchState, cde_velocity

    rows = []
    for n in sizes:
        state = PatchState(_wobbly_contour(n), KernelMode.qgsw(1.0))
        cde_velocity(state)  # warm caches before timing
        best = min(
            _timed(cde_velocity, state) for _ in range(repeats)
        )
        rows.append({"n": n, "seconds": best})
    print(json.dumps({"backend": ACTIVE_BACKEND, "rows": rows}))


def _timed(fn, *args):
    start = time.perf_counter()
    fn(*args)
    return time.perf_counter() - start


def run_child(backend, sizes, repeats):
    env = dict(os.environ, QGPATCH_BACKEND=backend, QGPATCH_WORKERS="1")
    proc = subprocess.run(
        [sys.executable, __file__, "--measure",
         "--sizes", ",".join(map(str, sizes)), "--repeats", str(repeats)],
        capture_output=True, text=True, env=env,
    )
    if proc.returncode != 0:
        return None, proc.stderr.strip().splitlines()[-1:] or ["no output"]
    return json.loads(proc.stdout), None


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="256,1024,4096",
                        help="comma-separated node counts")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repetitions per size; best time wins")
    parser.add_argument("--measure", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if args.measure:
        measure(sizes, args.repeats)
        return

    results = {}
    for backend in ("core", "python"):
        data, error = run_child(backend, sizes, args.repeats)
        if error is not None:
            print(f"backend {backend!r} unavailable: {error[0]}")
        else:
            results[backend] = {row["n"]: row["seconds"] for row in data["rows"]}

    if "core" in results and "python" in results:
        print(f"{'N':>6} {'core [s]':>12} {'python [s]':>12} {'speedup':>9}")
        for n in sizes:
            core_s, py_s = results["core"][n], results["python"][n]
            print(f"{n:>6} {core_s:>12.6f} {py_s:>12.6f} {py_s / core_s:>8.1f}x")
    else:
        for backend, rows in results.items():
            print(f"{'N':>6} {backend + ' [s]':>12}")
            for n in sizes:
                print(f"{n:>6} {rows[n]:>12.6f}")


if __name__ == "__main__":
    main()
