#!/usr/bin/env python3
"""Benchmark the compiled rate kernel against the pure-numpy fallback.

Times raw kernel evaluations and the full default 60 s closed-loop run on
each backend, and verifies that the two agree to floating-point tolerance.

    python benchmarks/bench_backends.py [--calls N] [--duration S]
"""

import argparse
import time

import numpy as np

from frenet_adp import engine, load_config, run_simulation


def time_kernel(backend, states, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for st in states:
            backend.rates(st)
        best = min(best, time.perf_counter() - t0)
    return best / len(states)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--calls", type=int, default=2000, help="kernel calls per timing pass")
    ap.add_argument("--duration", type=float, default=60.0, help="simulated horizon for the end-to-end timing")
    args = ap.parse_args()

    cfg = load_config(f"sim.duration = {args.duration}")
    path, gains, cost = cfg.path(), cfg.gains(), cfg.cost()
    ac = cfg.actor_critic()
    pack = engine.KernelPack.build(path, gains, cost, ac.learn, ac.grid, ac.proj_bound, ac.layer_frac)

    backends = [engine.PythonBackend(pack)]
    if engine.HAVE_COMPILED:
        backends.append(engine.CompiledBackend(pack))
    else:
        print("compiled kernel not built; benchmarking the fallback only")

    rng = np.random.default_rng(7)
    states = [
        np.concatenate(
            [
                rng.uniform(-1, 1, 2),
                [rng.uniform(-np.pi, np.pi), rng.uniform(-0.9, 0.9)],
                rng.uniform(-5, 5, 3),
                rng.uniform(-2, 2, 18),
            ]
        )
        for _ in range(args.calls)
    ]

    if len(backends) == 2:
        worst = 0.0
        for st in states[:500]:
            a, b = backends[0].rates(st), backends[1].rates(st)
            worst = max(worst, np.abs(a - b).max() / max(1.0, np.abs(a).max()))
        print(f"agreement over 500 random states: max relative difference {worst:.3e}")
        assert worst < 1e-12, "backends disagree"

    print(f"\n{'backend':>10s} {'per rate call':>16s} {'full run':>12s} {'speedup':>9s}")
    base_call = base_run = None
    for backend in backends:
        per_call = time_kernel(backend, states, repeats=3)
        t0 = time.perf_counter()
        log = run_simulation(path, gains, cost, ac, cfg.sim(), np.asarray(cfg.zeta0), backend=backend.name)
        run_s = time.perf_counter() - t0
        if backend.name == "python":
            base_call, base_run = per_call, run_s
        call_x = f"{base_call / per_call:.1f}x" if base_call else "-"
        print(f"{backend.name:>10s} {per_call * 1e6:>13.1f} us {run_s:>10.2f} s {call_x:>9s}")
        assert not log.aborted

    print(f"\nscenario: {cfg.sim().n_steps} steps of dt={cfg.dt}, grid of {ac.grid.n} stored states")


if __name__ == "__main__":
    main()
