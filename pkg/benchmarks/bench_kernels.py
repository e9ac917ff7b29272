#!/usr/bin/env python3
"""Benchmark the compiled integration kernels against the pure-Python path.

Runs the reference double-scroll circuit through the fixed-step, adaptive
and shadow-trajectory kernels with both backends in one process and prints
steps/second plus the speedup. The production backend is chosen at import
time (numba when available, unless MEMCHUA_NUMBA=0).

Usage: python benchmarks/bench_kernels.py [--steps N]
"""

import argparse
import time

import memchua as m
from memchua import kernels


def time_call(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000,
                        help="fixed-step count for the compiled path; the "
                             "pure path runs steps/10 and is scaled")
    args = parser.parse_args()

    state = m.reference_state()
    params = m.design_circuit(
        state, m.DesignSpec(v_eq=0.9, c1=1e-8, alpha=10.0, beta=14.22)).params
    d = params.device
    v_div = 1e3 * params.voltage_scale
    i_div = 1e3 * params.current_scale

    print(f"numba backend active: {kernels.USE_NUMBA}")
    n_fast = args.steps
    n_slow = max(1000, args.steps // 10)

    cases = [
        ("rk4_trajectory",
         lambda n: (*params.kernel_args, 0.1, 0.0, 0.0, 1e-6, n, 0, 10,
                    d.v_min, d.v_max, v_div, i_div, False)),
        ("benettin_lyapunov",
         lambda n: (*params.kernel_args, 0.1, 0.0, 0.0, 1e-6, n, 762, 0,
                    1e-8, v_div, i_div)),
    ]

    print(f"{'kernel':<20} {'backend':<10} {'steps':>9} {'time':>9} "
          f"{'steps/s':>12}")
    for name, make_args in cases:
        selected = getattr(kernels, name)
        pure = kernels.PURE_KERNELS[name]
        if selected is not pure:
            selected(*make_args(100))  # compile outside the timing
            t_sel, _ = time_call(selected, *make_args(n_fast))
            rate_sel = n_fast / t_sel
            print(f"{name:<20} {'numba':<10} {n_fast:>9} {t_sel:>8.3f}s "
                  f"{rate_sel:>12.3e}")
        else:
            rate_sel = None
        t_pure, _ = time_call(pure, *make_args(n_slow), repeats=1)
        rate_pure = n_slow / t_pure
        print(f"{name:<20} {'pure':<10} {n_slow:>9} {t_pure:>8.3f}s "
              f"{rate_pure:>12.3e}")
        if rate_sel:
            print(f"{'':<20} speedup {rate_sel / rate_pure:8.1f}x")

    # adaptive kernel: compare wall time for a fixed horizon
    cfg = m.IntegrationConfig(t_end=0.05, t_transient=0.0, record_stride=1,
                              abs_tol=1e-9, rel_tol=1e-7)
    h_max = cfg.t_end / 50.0
    dopri_args = (*params.kernel_args, 0.1, 0.0, 0.0, cfg.t_end,
                  0.0, 1, cfg.abs_tol, cfg.rel_tol, cfg.t_end * 1e-4, h_max,
                  d.v_min, d.v_max, v_div, i_div, False, cfg.max_steps)
    sel = kernels.dopri_trajectory
    pure = kernels.PURE_KERNELS["dopri_trajectory"]
    if sel is not pure:
        sel(*dopri_args)
        t_sel, out = time_call(sel, *dopri_args)
        print(f"{'dopri_trajectory':<20} {'numba':<10} {len(out[0]):>9} "
              f"{t_sel:>8.3f}s")
    t_pure, out = time_call(pure, *dopri_args, repeats=1)
    print(f"{'dopri_trajectory':<20} {'pure':<10} {len(out[0]):>9} "
          f"{t_pure:>8.3f}s")
    if sel is not pure:
        print(f"{'':<20} speedup {t_pure / t_sel:8.1f}x")


if __name__ == "__main__":
    main()
