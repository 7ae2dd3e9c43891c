"""Time the numba kernels against the numpy fallbacks.

    python benchmarks/bench_kernels.py [--points 100000] [--periods 3]
"""
import argparse
import time

import numpy as np

from qdob import _kernels
from qdob.filter_design import HyperParams, build_phi_plan
from qdob.simulate import NominalPlant, _delay_taps, discretize_plant


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def loop_args(params, plan, d):
    disc = discretize_plant(NominalPlant(), params.T, params.omega_b)
    n = d.size
    return (d, np.zeros(n), disc.plant.num, disc.plant.den, disc.observer.num, disc.observer.den,
            _delay_taps(plan), plan.ubar, int(plan.kappa), float(params.omega_c * params.L), True,
            np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), np.zeros((plan.l + 1, n)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--periods", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    params = HyperParams(T=1e-3, omega0=1.0, omega_a=10.0, omega_b=100.0, rho=0.1)
    plan = build_phi_plan(params)
    theta = np.linspace(0, np.pi, args.points)

    # warm the JIT before timing
    _kernels.cascade_amplitude_numba(plan.half_taps, plan.ubar, theta[:10])
    t_np, a_np = best_of(lambda: _kernels.cascade_amplitude_numpy(plan.half_taps, plan.ubar, theta), args.repeat)
    t_nb, a_nb = best_of(lambda: _kernels.cascade_amplitude_numba(plan.half_taps, plan.ubar, theta), args.repeat)
    print(f"cascade amplitude, {args.points} points: numpy {t_np:.3f}s  numba {t_nb:.3f}s  "
          f"speedup {t_np / t_nb:.1f}x  max diff {np.max(np.abs(a_np - a_nb)):.1e}")

    k = np.arange(args.periods * plan.Lbar)
    d = np.cos(k * params.T) + 0.5 * np.cos(2 * k * params.T + 0.3)
    _kernels.run_loop_numba(*loop_args(params, plan, d[: plan.Lbar]))
    a1, a2 = loop_args(params, plan, d), loop_args(params, plan, d)
    t_np, _ = best_of(lambda: _kernels.run_loop_numpy(*a1), args.repeat)
    t_nb, _ = best_of(lambda: _kernels.run_loop_numba(*a2), args.repeat)
    print(f"observer loop, {d.size} steps: numpy {t_np:.3f}s  numba {t_nb:.3f}s  "
          f"speedup {t_np / t_nb:.1f}x  max diff {np.max(np.abs(a1[12] - a2[12])):.1e}")


if __name__ == "__main__":
    main()
