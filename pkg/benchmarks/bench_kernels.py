"""Compare the compiled and pure-Python transport kernels.

Runs the monodromy loops of the Bolibruch family at a few parameter values
through both kernels, reports wall time per backend and the largest
difference between their results.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from isomono import _kernels_py
from isomono.fsdio import load_corpus
from isomono.monodromy import numeric_family, plan_loops

try:
    from isomono import _kernels
except ImportError:
    _kernels = None


def _jobs(samples):
    F = load_corpus("bolibruch").family
    jobs = []
    for s in samples:
        poles, res = numeric_family(F, s)
        plan = plan_loops(F, s)
        for loop in plan.loops:
            jobs.append((np.array(loop.kinds, dtype=np.int64), np.array(loop.segments, dtype=complex), poles, res))
    return jobs


def _run(kern, jobs, tol):
    out = []
    steps = terms = 0
    t0 = time.perf_counter()
    for kinds, segs, poles, res in jobs:
        hi, lo, s, k = kern.transport(kinds, segs, poles, res, np.eye(res.shape[1], dtype=complex), tol)
        out.append(hi + lo)
        steps += s
        terms += k
    return time.perf_counter() - t0, out, steps, terms


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=1)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args(argv)
    jobs = _jobs([{"a": 0.3}, {"a": 0.45}, {"a": 0.6}])
    results = {}
    backends = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels else [])
    for name, kern in backends:
        best = None
        for _ in range(args.repeat):
            dt, out, steps, terms = _run(kern, jobs, args.tol)
            best = dt if best is None else min(best, dt)
        results[name] = out
        print(f"{name:7s} {best:9.4f} s  loops={len(jobs)} steps={steps} terms={terms}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        rel = max(float(np.max(np.abs(a - b)) / np.max(np.abs(a))) for a, b in zip(py, cy))
        print(f"max relative difference {rel:.3e}")
    else:
        print("compiled kernel not available")


if __name__ == "__main__":
    main()
