"""Flat dotted-key run configuration.

The format is plain text, one ``key = value`` per line, ``#`` comments,
vectors comma separated.  Every key is optional; omitted keys take the
benchmark-scenario defaults (figure-eight path, identity cost weights,
the documented learning gains and initial weights).  Unknown keys and
invariant violations are rejected with the offending key named.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adp import CostSpec, LearningGains, SampleGrid
from .baseline import CollocationProblem
from .dynamics import ErrorState, GainSet
from .errors import InvalidValue, ParseError
from .geometry import PathSpec
from .sim import ActorCriticConfig, SimConfig

_DEFAULT_W0 = (0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 1.0)
_QUARTER_PI = np.pi / 4.0


@dataclass
class RunConfig:
    """Raw configuration values, one field per config key."""

    path_family: str = "lissajous"
    path_ax: float = 10.0
    path_ay: float = 15.0
    path_fx: float = 1.0
    path_fy: float = 2.0
    path_radius: float = 1.0
    k1: float = 0.1
    k2: float = 0.05
    v_des: float = 0.5
    Q: tuple = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
    R: tuple = (1.0, 0.0, 0.0, 1.0)
    eta_c1: float = 0.5
    eta_c2: float = 10.0
    eta_a: float = 5.0
    grid_s: tuple = (-1.0, 0.0, 1.0)
    grid_y: tuple = (-1.0, 0.0, 1.0)
    grid_theta: tuple = (-_QUARTER_PI, 0.0, _QUARTER_PI)
    grid_phi: tuple = (-0.9, 0.0, 0.9)
    wc0: tuple = _DEFAULT_W0
    wa0: tuple = _DEFAULT_W0
    proj_bound: float | None = None
    layer_frac: float = 0.01
    eps_bound: float = 0.0
    dt: float = 0.005
    duration: float = 60.0
    log_stride: int = 1
    zeta0: tuple = (-0.5, 0.25, -np.pi / 6.0, 0.0)
    baseline_nodes: int = 120
    baseline_horizon: float = 60.0

    # -- constructed objects ------------------------------------------------

    def path(self) -> PathSpec:
        return PathSpec(
            family=self.path_family,
            radius=self.path_radius,
            ax=self.path_ax,
            ay=self.path_ay,
            fx=self.path_fx,
            fy=self.path_fy,
        )

    def gains(self) -> GainSet:
        return GainSet(k1=self.k1, k2=self.k2, v_des=self.v_des)

    def cost(self) -> CostSpec:
        return CostSpec(Q=np.asarray(self.Q).reshape(3, 3), R=np.asarray(self.R).reshape(2, 2))

    def learn(self) -> LearningGains:
        return LearningGains(eta_c1=self.eta_c1, eta_c2=self.eta_c2, eta_a=self.eta_a)

    def grid(self) -> SampleGrid:
        return SampleGrid.from_axes(self.grid_s, self.grid_y, self.grid_theta, self.grid_phi)

    def bound(self) -> float:
        if self.proj_bound is not None:
            return self.proj_bound
        norm = float(np.linalg.norm(self.wa0))
        return 10.0 * norm if norm > 0.0 else 10.0

    def actor_critic(self) -> ActorCriticConfig:
        return ActorCriticConfig(
            learn=self.learn(),
            grid=self.grid(),
            wc0=np.asarray(self.wc0, dtype=float),
            wa0=np.asarray(self.wa0, dtype=float),
            proj_bound=self.bound(),
            layer_frac=self.layer_frac,
        )

    def sim(self) -> SimConfig:
        return SimConfig(dt=self.dt, duration=self.duration, log_stride=self.log_stride)

    def baseline_problem(self) -> CollocationProblem:
        return CollocationProblem(zeta0=np.asarray(self.zeta0), nodes=self.baseline_nodes, horizon=self.baseline_horizon)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _parse_vector(n: int | None):
    def parse(text: str) -> tuple:
        parts = [p for chunk in text.split(",") for p in chunk.split()]
        vals = tuple(float(p) for p in parts)
        if n is not None and len(vals) != n:
            raise ValueError(f"expected {n} values, got {len(vals)}")
        return vals

    return parse


def _parse_family(text: str) -> str:
    fam = text.strip().lower()
    if fam not in ("line", "circle", "lissajous"):
        raise ValueError("family must be line, circle, or lissajous")
    return fam


#: key -> (RunConfig field, parser)
KEYS = {
    "path.family": ("path_family", _parse_family),
    "path.ax": ("path_ax", _parse_float),
    "path.ay": ("path_ay", _parse_float),
    "path.fx": ("path_fx", _parse_float),
    "path.fy": ("path_fy", _parse_float),
    "path.radius": ("path_radius", _parse_float),
    "gains.k1": ("k1", _parse_float),
    "gains.k2": ("k2", _parse_float),
    "gains.v_des": ("v_des", _parse_float),
    "cost.Q": ("Q", _parse_vector(9)),
    "cost.R": ("R", _parse_vector(4)),
    "adp.eta_c1": ("eta_c1", _parse_float),
    "adp.eta_c2": ("eta_c2", _parse_float),
    "adp.eta_a": ("eta_a", _parse_float),
    "adp.grid.s": ("grid_s", _parse_vector(None)),
    "adp.grid.y": ("grid_y", _parse_vector(None)),
    "adp.grid.theta": ("grid_theta", _parse_vector(None)),
    "adp.grid.phi": ("grid_phi", _parse_vector(None)),
    "adp.wc0": ("wc0", _parse_vector(9)),
    "adp.wa0": ("wa0", _parse_vector(9)),
    "adp.proj_bound": ("proj_bound", _parse_float),
    "adp.layer_frac": ("layer_frac", _parse_float),
    "adp.eps_bound": ("eps_bound", _parse_float),
    "sim.dt": ("dt", _parse_float),
    "sim.duration": ("duration", _parse_float),
    "sim.log_stride": ("log_stride", _parse_int),
    "sim.zeta0": ("zeta0", _parse_vector(4)),
    "baseline.nodes": ("baseline_nodes", _parse_int),
    "baseline.horizon": ("baseline_horizon", _parse_float),
}

_FIELD_TO_KEY = {f: k for k, (f, _) in KEYS.items()}


def validate(cfg: RunConfig) -> RunConfig:
    """Run every constructor so each invariant is checked, naming the key."""
    checks = [
        (("path.family", "path.radius"), cfg.path),
        (("gains.k1", "gains.k2", "gains.v_des"), cfg.gains),
        (("cost.Q", "cost.R"), cfg.cost),
        (("adp.eta_c1", "adp.eta_c2", "adp.eta_a"), cfg.learn),
        (("adp.grid.s", "adp.grid.y", "adp.grid.theta", "adp.grid.phi"), cfg.grid),
        (("adp.wc0", "adp.wa0", "adp.proj_bound", "adp.layer_frac"), cfg.actor_critic),
        (("sim.dt", "sim.duration", "sim.log_stride"), cfg.sim),
        (("sim.zeta0",), lambda: ErrorState(*np.asarray(cfg.zeta0, dtype=float))),
        (("baseline.nodes", "baseline.horizon"), cfg.baseline_problem),
    ]
    for keys, build in checks:
        try:
            build()
        except Exception as exc:
            raise InvalidValue(f"{'/'.join(keys)}: {exc}") from exc
    if not cfg.eps_bound >= 0.0:
        raise InvalidValue("adp.eps_bound: must be nonnegative")
    return cfg


def load_config(text: str) -> RunConfig:
    """Parse config text into a fully defaulted, validated RunConfig."""
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEYS:
            raise InvalidValue(f"line {lineno}: unknown key {key!r}")
        field_name, parser = KEYS[key]
        try:
            setattr(cfg, field_name, parser(value))
        except ValueError as exc:
            raise InvalidValue(f"{key}: {exc}") from exc
    return validate(cfg)


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; load(dump(cfg)) reproduces cfg exactly."""
    lines = []
    for key, (field_name, _) in KEYS.items():
        value = getattr(cfg, field_name)
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
