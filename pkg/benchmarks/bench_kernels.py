"""Timing comparison of the compiled kernels against their interpreted twins.

Every hot kernel ships in two builds from the same source: a numba-compiled
version (the default) and the plain interpreted version that serves as the
fallback when BISTAB_NO_NUMBA=1. Both builds are exported unconditionally,
so this script times each pair on identical inputs and reports the per-call
cost and the speedup. The parity of the two builds (bitwise-identical
results) is covered by the test suite; this script only measures speed.

Run from the repository root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --quick --repeats 5
"""
import argparse
import time
from dataclasses import dataclass

import numpy as np

from bistab.kernels import (
    integrate_adaptive,
    integrate_adaptive_py,
    jac12,
    jac12_py,
    newton12,
    newton12_py,
    rhs12,
    rhs12_py,
    settle_loop,
    settle_loop_py,
    warmup,
)
from bistab.model import MeanFieldState, SystemParams

NO_TARGETS = np.empty((0, 12))


# === timing harness =======================================================


@dataclass
class BenchCase:
    """One kernel pair with per-build call counts."""

    name: str
    compiled: callable
    interpreted: callable
    n_compiled: int
    n_interpreted: int


def best_per_call(fn, n_calls: int, repeats: int) -> float:
    """Best-of-repeats mean wall time per call, in seconds."""
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(n_calls):
            fn()
        best = min(best, (time.perf_counter() - t0) / n_calls)
    return best


def si_time(seconds: float) -> str:
    for unit, scale in (("s", 1.0), ("ms", 1e-3), ("us", 1e-6)):
        if seconds >= scale:
            return f"{seconds / scale:8.2f} {unit}"
    return f"{seconds / 1e-9:8.2f} ns"


# === cases ================================================================


def build_cases(quick: bool) -> list:
    p = SystemParams().with_drive_polar(1.13, np.pi / 4.0)
    pv = p.to_vector()
    y_vac = MeanFieldState.empty().to_vector()

    out = np.empty(12)
    jac = np.zeros((12, 12))

    # a settled point perturbed by 1e-4 gives newton a realistic warm start
    y_root = y_vac.copy()
    settle_loop(y_root, pv, 1e-9, 1e5, 1e-10, 1e-10, NO_TARGETS, 1e-6)
    y_near = y_root.copy()
    y_near[0] += 1e-4

    t_eval = np.linspace(0.5, 5.0, 10)
    samples = np.empty((t_eval.size, 12))

    def run_rhs(fn):
        return lambda: fn(y_near, pv, out)

    def run_jac(fn):
        return lambda: fn(y_near, pv, jac)

    def run_newton(fn):
        def call():
            y = y_near.copy()
            fn(y, pv, 50, 1e-12)
        return call

    def run_integrate(fn):
        def call():
            y = y_vac.copy()
            fn(y, pv, 0.0, 5.0, 1e-10, 1e-10, t_eval, samples)
        return call

    def run_settle(fn):
        def call():
            y = y_vac.copy()
            fn(y, pv, 1e-9, 1e5, 1e-10, 1e-10, NO_TARGETS, 1e-6)
        return call

    cut = 10 if quick else 1
    return [
        BenchCase("rhs (12-dim flow)", run_rhs(rhs12), run_rhs(rhs12_py),
                  100000 // cut, 5000 // cut),
        BenchCase("jacobian (12x12)", run_jac(jac12), run_jac(jac12_py),
                  50000 // cut, 2000 // cut),
        BenchCase("newton (near root)", run_newton(newton12),
                  run_newton(newton12_py), 10000 // cut, 500 // cut),
        BenchCase("integrate (t=5)", run_integrate(integrate_adaptive),
                  run_integrate(integrate_adaptive_py), 200 // cut,
                  max(5 // cut, 1)),
        BenchCase("settle (vacuum)", run_settle(settle_loop),
                  run_settle(settle_loop_py), max(20 // cut, 2), 1),
    ]


# === entry point ==========================================================


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        description="time the compiled kernels against the interpreted twins")
    ap.add_argument("--repeats", type=int, default=3,
                    help="best-of-N repetitions per measurement (default 3)")
    ap.add_argument("--quick", action="store_true",
                    help="cut call counts tenfold for a fast smoke run")
    args = ap.parse_args(argv)
    if args.repeats < 1:
        ap.error("--repeats must be >= 1")

    print("warming up the compiled kernels ...", flush=True)
    warmup()
    cases = build_cases(args.quick)

    header = (f"{'kernel':<20} {'compiled':>12} {'interpreted':>12} "
              f"{'speedup':>9}")
    print()
    print(header)
    print("-" * len(header))
    for case in cases:
        tc = best_per_call(case.compiled, case.n_compiled, args.repeats)
        ti = best_per_call(case.interpreted, case.n_interpreted, args.repeats)
        print(f"{case.name:<20} {si_time(tc):>12} {si_time(ti):>12} "
              f"{ti / tc:>8.0f}x")
    print()
    print("interpreted twins are what BISTAB_NO_NUMBA=1 selects at import")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
