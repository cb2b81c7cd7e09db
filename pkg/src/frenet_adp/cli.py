"""Batch command-line front end.

Runs the closed-loop simulation (and optionally the collocation oracle),
writes CSV logs, and prints a human-readable summary followed by a
machine-readable ``[summary]`` key-value block.  Verbosity is selected by
the ADP_PF_LOG environment variable (debug/info/warning/error).

Exit codes: 0 success, 1 simulation aborted (partial log written),
2 configuration error, 3 oracle failed to converge.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import adp, baseline, sim
from .config import RunConfig, load_config
from .errors import InvalidValue, NotConverged, ParseError


def _configure_logging() -> None:
    level = os.environ.get("ADP_PF_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _summary_block(items: list[tuple[str, object]]) -> str:
    lines = ["[summary]"]
    for key, value in items:
        if isinstance(value, float):
            value = f"{value:.17g}"
        lines.append(f"{key} = {value}")
    return "\n".join(lines)


def cmd_run(cfg: RunConfig, out_dir: Path, backend: str | None = None) -> int:
    """Simulate, write <out>/run.csv and <out>/summary.txt, print a summary."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path, gains, cost = cfg.path(), cfg.gains(), cfg.cost()
    t0 = time.perf_counter()
    trajectory = sim.run_simulation(path, gains, cost, cfg.actor_critic(), cfg.sim(), np.asarray(cfg.zeta0), backend=backend)
    elapsed = time.perf_counter() - t0
    trajectory.write_csv(out_dir / "run.csv")

    e_final = float(np.linalg.norm(trajectory.zeta[-1, :3]))
    rank, c_lower = adp.rank_check(cfg.grid(), trajectory.wa[-1], path, gains, cost)
    lf = adp.estimate_lf(path, gains)
    report = adp.gain_condition_check(cost, cfg.learn(), c_lower, cfg.grid().n, cfg.eps_bound, lf)

    status = "aborted" if trajectory.aborted else "ok"
    items = [
        ("status", status),
        ("samples", trajectory.n),
        ("final_time", float(trajectory.t[-1])),
        ("final_e_norm", e_final),
        ("final_cost", float(trajectory.cost[-1])),
        ("rank", rank),
        ("c_lower", c_lower),
        ("lf_estimate", lf),
        ("eps_bound", float(cfg.eps_bound)),
        ("cond1_margin", report.cond1_margin),
        ("cond1_ok", report.cond1_ok),
        ("cond2_margin", report.cond2_margin),
        ("cond2_ok", report.cond2_ok),
    ]
    if trajectory.aborted:
        items.append(("abort_reason", trajectory.abort_reason))
    block = _summary_block(items)
    (out_dir / "summary.txt").write_text(block + "\n")

    print(f"run: {trajectory.n} samples over {trajectory.t[-1]:.6g} s ({elapsed:.2f} s wall)")
    print(f"final error norm {e_final:.6g}, accumulated cost {trajectory.cost[-1]:.6g}")
    print(f"stored-grid rank {rank} (smallest eigenvalue {c_lower:.6g})")
    cond = "both hold" if (report.cond1_ok and report.cond2_ok) else "not all hold"
    print(f"gain conditions at eps_bound={cfg.eps_bound:g}: {cond} (margins {report.cond1_margin:.6g}, {report.cond2_margin:.6g})")
    if trajectory.aborted:
        print(f"ABORTED: {trajectory.abort_reason}", file=sys.stderr)
    print(block)
    return 1 if trajectory.aborted else 0


def cmd_compare(cfg: RunConfig, out_dir: Path, backend: str | None = None) -> int:
    """Run the simulation and the oracle, write both CSVs plus metrics."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path, gains, cost = cfg.path(), cfg.gains(), cfg.cost()
    trajectory = sim.run_simulation(path, gains, cost, cfg.actor_critic(), cfg.sim(), np.asarray(cfg.zeta0), backend=backend)
    trajectory.write_csv(out_dir / "adp.csv")
    if trajectory.aborted:
        print(f"ABORTED: {trajectory.abort_reason}", file=sys.stderr)
        return 1

    t0 = time.perf_counter()
    try:
        oracle = baseline.solve_collocation(cfg.baseline_problem(), path, gains, cost)
    except NotConverged as exc:
        print(f"oracle did not converge: {exc}", file=sys.stderr)
        return 3
    elapsed = time.perf_counter() - t0
    oracle.write_csv(out_dir / "baseline.csv")

    metrics = baseline.compare_trajectories(trajectory, oracle)
    lines = metrics.lines()
    (out_dir / "metrics.txt").write_text("\n".join(lines) + "\n")

    print(f"oracle: cost {oracle.cost:.6g}, defect {oracle.defect_norm:.3e}, solved in {elapsed:.2f} s wall")
    print(f"cost ratio (run / oracle): {metrics.cost_ratio:.4f}")
    print(_summary_block([("status", "ok")] + [tuple(ln.split(" = ", 1)) for ln in lines]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frenet-adp", description="Approximate-optimal path-following simulator")
    parser.add_argument("--config", type=Path, default=None, help="config file (flat dotted keys); defaults used if omitted")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory for CSV logs")
    parser.add_argument("--dry-run", action="store_true", help="validate the configuration and exit")
    parser.add_argument("--compare-baseline", action="store_true", help="also solve the collocation oracle and compare")
    parser.add_argument("--duration", type=float, default=None, help="override sim.duration [s]")
    parser.add_argument("--dt", type=float, default=None, help="override sim.dt [s]")
    return parser


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = load_config(text)
        if args.duration is not None:
            cfg.duration = args.duration
        if args.dt is not None:
            cfg.dt = args.dt
        cfg.sim()  # re-validate overrides
    except (ParseError, InvalidValue, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.dry_run:
        print("config ok")
        return 0
    if args.compare_baseline:
        return cmd_compare(cfg, args.out)
    return cmd_run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
