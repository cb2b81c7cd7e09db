"""Flattened parameter pack consumed by both rate-kernel backends.

The coupled closed-loop state integrated by the simulator is packed into a
single float64 vector:

    index 0..3    error state zeta = (s, y, theta, phi)
    index 4..6    world pose (x, y, theta_b)
    index 7..15   critic weights
    index 16..24  actor weights

Both backends map this vector to its time derivative.  Everything that is
constant along a run (path parameters, gains, cost matrices, grid tensors)
lives here, precomputed once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..adp import CostSpec, GridWorkspace, LearningGains, SampleGrid
from ..dynamics import GainSet
from ..geometry import PathSpec

NSTATE = 25
ZETA = slice(0, 4)
POSE = slice(4, 7)
WC = slice(7, 16)
WA = slice(16, 25)

FAMILY_CODES = {"line": 0, "circle": 1, "lissajous": 2}


@dataclass
class KernelPack:
    family: int
    p0: float
    p1: float
    p2: float
    p3: float
    k1: float
    k2: float
    v_des: float
    Q: np.ndarray
    R: np.ndarray
    Rinv: np.ndarray
    eta_c1: float
    eta_c2: float
    eta_a: float
    A: np.ndarray
    SG: np.ndarray
    w0: np.ndarray
    state_cost: np.ndarray
    n_grid: int
    bound: float
    layer_frac: float

    @classmethod
    def build(
        cls,
        path: PathSpec,
        gains: GainSet,
        cost: CostSpec,
        learn: LearningGains,
        grid: SampleGrid,
        bound: float,
        layer_frac: float = 0.01,
    ) -> "KernelPack":
        ws = GridWorkspace(grid, path, gains, cost)
        params = [0.0, 0.0, 0.0, 0.0]
        if path.family == "circle":
            params[0] = path.radius
        elif path.family == "lissajous":
            params = [path.ax, path.ay, path.fx, path.fy]
        c = np.ascontiguousarray
        return cls(
            family=FAMILY_CODES[path.family],
            p0=params[0],
            p1=params[1],
            p2=params[2],
            p3=params[3],
            k1=gains.k1,
            k2=gains.k2,
            v_des=gains.v_des,
            Q=c(cost.Q),
            R=c(cost.R),
            Rinv=c(cost.Rinv),
            eta_c1=learn.eta_c1,
            eta_c2=learn.eta_c2,
            eta_a=learn.eta_a,
            A=c(ws.A),
            SG=c(ws.SG),
            w0=c(ws.w0),
            state_cost=c(ws.state_cost),
            n_grid=grid.n,
            bound=bound,
            layer_frac=layer_frac,
        )


def make_scalar_geometry(pack: KernelPack):
    """Fast scalar (curvature, parametric speed) closure for the python backend."""
    if pack.family == 0:
        return lambda p: (0.0, 1.0)
    if pack.family == 1:
        inv_r = 1.0 / pack.p0
        radius = pack.p0
        return lambda p: (inv_r, radius)
    ax, ay, fx, fy = pack.p0, pack.p1, pack.p2, pack.p3

    def geom(p: float):
        dx = ax * fx * math.cos(fx * p)
        dy = ay * fy * math.cos(fy * p)
        ddx = -ax * fx * fx * math.sin(fx * p)
        ddy = -ay * fy * fy * math.sin(fy * p)
        speed_sq = dx * dx + dy * dy
        speed = math.sqrt(speed_sq)
        return (dx * ddy - dy * ddx) / (speed_sq * speed), speed

    return geom
