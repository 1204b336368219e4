#!/usr/bin/env python3
"""Benchmark the compiled Monte Carlo kernel against the NumPy fallback.

Runs representative workloads (best-response utility matrices and
verification failure counts) through both implementations, checks that
they agree, and reports wall times and speedups.

Usage: python benchmarks/benchmark_backends.py [--reps N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from infoprocure import RngStream, normal_quantile
from infoprocure.kernels import RULE_LCB, RULE_ORACLE, RULE_SAMPLE_VARIANCE, _fallback

try:
    from infoprocure.kernels import _mc
except ImportError:
    _mc = None


def _time(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=5000, help="Monte Carlo replications")
    args = parser.parse_args()

    key = RngStream(7).child("bench").key()
    z95 = normal_quantile(0.95)
    grid = np.arange(10.0, 16.01, 0.25)
    utility_cases = [
        ("best-response, exact oracle", RULE_ORACLE, 1000.0),
        ("best-response, sample variance", RULE_SAMPLE_VARIANCE, 1000.0),
        ("best-response, lcb(0.05)", RULE_LCB, 1000.0),
        ("best-response, lcb(0.05), beta=100", RULE_LCB, 100.0),
    ]

    rows = []
    for label, rule_id, beta in utility_cases:
        call_args = (
            0.12, 10.0, 0.12, grid, 10, beta, 1.0, rule_id, z95,
            0.1, 0.2, 10.0, 20.0, args.reps, key,
        )
        t_py, out_py = _time(_fallback.mc_utilities, *call_args)
        if _mc is not None:
            t_c, out_c = _time(_mc.mc_utilities, *call_args)
            assert np.allclose(out_py, out_c, rtol=1e-12, atol=1e-12)
        else:
            t_c = float("nan")
        rows.append((label, t_py, t_c))

    fail_args = (10.0, 10.0, 500, RULE_LCB, z95, args.reps, key)
    t_py, n_py = _time(_fallback.mc_failure_count, *fail_args)
    if _mc is not None:
        t_c, n_c = _time(_mc.mc_failure_count, *fail_args)
        assert n_py == n_c
    else:
        t_c = float("nan")
    rows.append(("failure-prob, lcb(0.05), n=500", t_py, t_c))

    print(f"reps = {args.reps}; compiled kernel {'available' if _mc else 'NOT BUILT'}")
    print(f"{'workload':<38} {'numpy (s)':>10} {'compiled (s)':>13} {'speedup':>8}")
    for label, t_py, t_c in rows:
        speed = f"{t_py / t_c:7.1f}x" if t_c == t_c and t_c > 0 else "     n/a"
        print(f"{label:<38} {t_py:>10.4f} {t_c:>13.4f} {speed:>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
