"""Time the hot kernels with and without numba.

Runs each kernel through a realistic workload twice: once through the
module's active implementation (JIT-compiled unless RAMPFLOW_NUMBA=0) and
once through the plain-Python body.  Usage:

    python benchmarks/bench_kernels.py [--steps 20000] [--rounds 2000]
"""

import argparse
import time

import numpy as np

from rampflow import _kernels
from rampflow.network import step
from rampflow.scenarios import build_three_ramp_network


def bench_ctm(fn, steps: int) -> float:
    net = build_three_ramp_network()
    rng = np.random.default_rng(0)
    dt = 6.0 / 3600.0
    demands = rng.uniform(0.0, 1500.0, size=(steps, 3))
    origin = rng.uniform(0.0, 8000.0, size=steps)
    greens = rng.integers(0, 2, size=(steps, 3)).astype(np.bool_)
    start = time.perf_counter()
    for k in range(steps):
        net.meter_green[:] = greens[k]
        origin_queue, *_ = fn(
            net.density,
            net.length,
            net.lanes,
            net.speed_cap,
            net.fd.v_ff,
            net.fd.wave_speed,
            net.fd.rho_jam,
            net.capacity_drop,
            net.merge_priority,
            net.ramp_cell,
            net.ramp_queue,
            net.ramp_overflow,
            net.ramp_qmax,
            net.ramp_capacity,
            net.meter_green,
            demands[k],
            float(origin[k]),
            net.origin_queue,
            dt,
        )
        net.origin_queue = origin_queue
    return time.perf_counter() - start


def bench_max_plus(fn, rounds: int) -> float:
    rng = np.random.default_rng(1)
    n_actions = np.array([2, 2, 2], dtype=np.int64)
    edge_ends = np.array([[0, 1], [1, 2]], dtype=np.int64)
    locals_ = rng.uniform(-30.0, 0.0, size=(rounds, 3, 2))
    edges = rng.uniform(-30.0, 0.0, size=(rounds, 2, 2, 2))
    start = time.perf_counter()
    for k in range(rounds):
        fn(n_actions, locals_[k], edge_ends, edges[k], 100, 1e-6, False)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--rounds", type=int, default=2_000)
    args = parser.parse_args()

    label = "numba" if _kernels.NUMBA_ACTIVE else "python (RAMPFLOW_NUMBA=0)"
    # Warm up compilation outside the timed region.
    bench_ctm(_kernels.ctm_step, 10)
    bench_max_plus(_kernels.max_plus_core, 10)

    rows = []
    t_active = bench_ctm(_kernels.ctm_step, args.steps)
    t_py = bench_ctm(_kernels.ctm_step_impl, args.steps)
    rows.append(("ctm_step", args.steps, t_active, t_py))

    t_active = bench_max_plus(_kernels.max_plus_core, args.rounds)
    t_py = bench_max_plus(_kernels.max_plus_core_impl, args.rounds)
    rows.append(("max_plus_core", args.rounds, t_active, t_py))

    print(f"active implementation: {label}")
    print(f"{'kernel':<15} {'calls':>8} {'active (s)':>12} {'pure py (s)':>12} {'speedup':>9}")
    for name, calls, t_a, t_p in rows:
        speedup = t_p / t_a if t_a > 0 else float("inf")
        print(f"{name:<15} {calls:>8} {t_a:>12.3f} {t_p:>12.3f} {speedup:>8.1f}x")

    # end-to-end sanity: one simulated episode through the public wrapper
    net = build_three_ramp_network()
    start = time.perf_counter()
    for _ in range(350):
        step(net, 6000.0, [1000.0] * 3, 6.0 / 3600.0)
    print(f"episode of 350 wrapped steps: {time.perf_counter() - start:.3f} s")


if __name__ == "__main__":
    main()
