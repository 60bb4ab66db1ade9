#!/usr/bin/env python3
"""Benchmark the compiled likelihood kernel against the NumPy fallback.

Times three workloads per backend on one synthetic cohort:

* a single score/information evaluation (the Newton inner step),
* a full Newton fit,
* a paired bootstrap block (the pipeline's dominant cost).

Usage: python benchmarks/kernel_benchmark.py [--n 2000] [--replicates 200]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import timescales as ts
from timescales import kernels
from timescales.bootstrap import paired_bootstrap
from timescales.coxfit import CohortArrays, CoxWorkspace, FitOptions, fit_workspace


def time_it(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--replicates", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    cohort = ts.generate_cohort(ts.default_params(n=args.n, rho=0.4), seed=0)
    arrays = CohortArrays.from_cohort(cohort)
    specs = {m: ts.model_preset(m, 1) for m in ("m1", "m2", "m3")}
    ws = CoxWorkspace(arrays, specs["m3"])
    beta = np.array([0.02])

    print(f"cohort: n={args.n}, events={cohort.n_events}; "
          f"backends: {', '.join(kernels.available_backends())}")
    header = f"{'backend':<8} {'score_info':>12} {'fit':>12} {'bootstrap':>12}"
    print(header)
    print("-" * len(header))

    results = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        t_eval = time_it(lambda: ws.score_info(beta, "breslow"), args.repeats * 20)
        t_fit = time_it(lambda: fit_workspace(CoxWorkspace(arrays, specs["m3"]),
                                              FitOptions()), args.repeats)
        t_boot = time_it(
            lambda: paired_bootstrap(arrays, specs, [("m1", "m3")],
                                     replicates=args.replicates, seed=1),
            1,
        )
        results[backend] = (t_eval, t_fit, t_boot)
        print(f"{backend:<8} {t_eval * 1e6:>10.1f}us {t_fit * 1e3:>10.2f}ms {t_boot:>11.2f}s")

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print("-" * len(header))
        print(f"{'speedup':<8} {py[0] / cy[0]:>11.1f}x {py[1] / cy[1]:>11.1f}x "
              f"{py[2] / cy[2]:>11.1f}x")


if __name__ == "__main__":
    main()
