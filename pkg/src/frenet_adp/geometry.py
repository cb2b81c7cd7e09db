"""Parametric paths and transforms between the world frame and the
Serret-Frenet frame attached to the virtual target.

Three path families are supported:

* ``line``      -- the x-axis, (p, 0)
* ``circle``    -- (r cos p, r sin p)
* ``lissajous`` -- (ax sin(fx p), ay sin(fy p))

All quantities are functions of the raw path parameter; curvature uses the
general parametric formula, which reduces to the Frenet curvature when the
path happens to be arc-length parametrized (line, unit-speed circle).

Every operation accepts a scalar or an ndarray parameter and is vectorized
over it.  Angles returned by this module are wrapped to (-pi, pi].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoint

# Below this derivative magnitude (both components) a path point is treated
# as degenerate; all bundled families are regular everywhere.
DEGENERACY_EPS = 1e-12


def wrap_angle(a):
    """Wrap an angle (scalar or array) to the interval (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(a)) % (2.0 * np.pi)


@dataclass(frozen=True)
class PathSpec:
    """Analytic parametric 2D path.

    ``family`` is one of ``"line"``, ``"circle"``, ``"lissajous"``; only the
    parameters of the active family are used.
    """

    family: str
    radius: float = 1.0
    ax: float = 10.0
    ay: float = 15.0
    fx: float = 1.0
    fy: float = 2.0

    def __post_init__(self):
        if self.family not in ("line", "circle", "lissajous"):
            raise ValueError(f"unknown path family {self.family!r}")
        if self.family == "circle" and not self.radius > 0.0:
            raise ValueError("circle radius must be positive")

    @classmethod
    def line(cls) -> "PathSpec":
        return cls(family="line")

    @classmethod
    def circle(cls, radius: float) -> "PathSpec":
        return cls(family="circle", radius=radius)

    @classmethod
    def lissajous(cls, ax=10.0, ay=15.0, fx=1.0, fy=2.0) -> "PathSpec":
        return cls(family="lissajous", ax=ax, ay=ay, fx=fx, fy=fy)


@dataclass
class WorldPose:
    """Planar pose (x, y, heading); heading stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta_b: float

    def __post_init__(self):
        self.theta_b = float(wrap_angle(self.theta_b))

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y, self.theta_b], dtype=dtype or float)


@dataclass(frozen=True)
class FrenetFrame:
    """Moving frame on the path: origin, tangent angle, curvature at s_p."""

    origin: np.ndarray
    theta_f: float
    curvature: float
    s_p: float


def _derivatives(path: PathSpec, p, order: int = 2):
    """Position and parameter-derivatives up to ``order`` (max 3).

    Returns (x, y, x', y', ...) as a flat tuple of arrays.
    """
    p = np.asarray(p, dtype=float)
    if path.family == "line":
        z = np.zeros_like(p)
        vals = [p, z, np.ones_like(p), z, z, z, z, z]
    elif path.family == "circle":
        r = path.radius
        c, s = np.cos(p), np.sin(p)
        vals = [r * c, r * s, -r * s, r * c, -r * c, -r * s, r * s, -r * c]
    else:
        ax, ay, fx, fy = path.ax, path.ay, path.fx, path.fy
        sx, cx = np.sin(fx * p), np.cos(fx * p)
        sy, cy = np.sin(fy * p), np.cos(fy * p)
        vals = [
            ax * sx,
            ay * sy,
            ax * fx * cx,
            ay * fy * cy,
            -ax * fx**2 * sx,
            -ay * fy**2 * sy,
            -ax * fx**3 * cx,
            -ay * fy**3 * cy,
        ]
    return tuple(vals[: 2 * (order + 1)])


def _check_regular(dx, dy):
    bad = (np.abs(dx) < DEGENERACY_EPS) & (np.abs(dy) < DEGENERACY_EPS)
    if np.any(bad):
        raise DegeneratePoint("path derivative vanished (norm below 1e-12)")


def path_point(path: PathSpec, p):
    """Point on the path at parameter p, shape (..., 2)."""
    x, y = _derivatives(path, p, order=0)
    return np.stack([x, y], axis=-1)


def path_tangent_angle(path: PathSpec, p):
    """Angle of the path tangent against the world x-axis, in (-pi, pi]."""
    x, y, dx, dy = _derivatives(path, p, order=1)
    _check_regular(dx, dy)
    return wrap_angle(np.arctan2(dy, dx))


def path_curvature(path: PathSpec, p):
    """Signed parametric curvature (x'y'' - y'x'') / (x'^2 + y'^2)^(3/2)."""
    x, y, dx, dy, ddx, ddy = _derivatives(path, p, order=2)
    _check_regular(dx, dy)
    speed_sq = dx * dx + dy * dy
    return (dx * ddy - dy * ddx) / speed_sq**1.5


def path_speed(path: PathSpec, p):
    """Parametric speed ||r'(p)||: arc length per unit parameter."""
    x, y, dx, dy = _derivatives(path, p, order=1)
    _check_regular(dx, dy)
    return np.sqrt(dx * dx + dy * dy)


def path_speed_rate(path: PathSpec, p):
    """Parameter derivative of the parametric speed."""
    x, y, dx, dy, ddx, ddy = _derivatives(path, p, order=2)
    _check_regular(dx, dy)
    return (dx * ddx + dy * ddy) / np.sqrt(dx * dx + dy * dy)


def path_curvature_rate(path: PathSpec, p):
    """Derivative of the signed curvature with respect to the parameter.

    Needed for analytic Jacobians of the closed-loop drift (the curvature
    enters through the auxiliary path state).  Verified against finite
    differences in the test suite.
    """
    x, y, dx, dy, ddx, ddy, dddx, dddy = _derivatives(path, p, order=3)
    _check_regular(dx, dy)
    speed_sq = dx * dx + dy * dy
    n = dx * ddy - dy * ddx
    dn = dx * dddy - dy * dddx
    return dn / speed_sq**1.5 - 3.0 * n * (dx * ddx + dy * ddy) / speed_sq**2.5


def frenet_frame(path: PathSpec, s_p: float) -> FrenetFrame:
    """Serret-Frenet frame at the virtual target location s_p."""
    return FrenetFrame(
        origin=path_point(path, s_p),
        theta_f=float(path_tangent_angle(path, s_p)),
        curvature=float(path_curvature(path, s_p)),
        s_p=float(s_p),
    )


def frenet_error(path: PathSpec, s_p, pose):
    """Express a world pose relative to the frame at s_p.

    Returns (s, y, theta): the along-track and cross-track components of the
    displacement from the virtual target, and the heading error
    theta_b - theta_f wrapped to (-pi, pi].  ``pose`` may be a WorldPose or
    an array (..., 3); s_p broadcasts against it.
    """
    pose = np.asarray(pose, dtype=float)
    x, y, dx, dy = _derivatives(path, s_p, order=1)
    _check_regular(dx, dy)
    theta_f = np.arctan2(dy, dx)
    c, sn = np.cos(theta_f), np.sin(theta_f)
    ex = pose[..., 0] - x
    ey = pose[..., 1] - y
    s = c * ex + sn * ey
    yy = -sn * ex + c * ey
    theta = wrap_angle(pose[..., 2] - theta_f)
    return np.stack([s, yy, theta], axis=-1)


def world_from_frenet(path: PathSpec, s_p, err):
    """Inverse of :func:`frenet_error`: frame-relative (s, y, theta) to world.

    Returns an array (..., 3) of (x, y, theta_b); wrap theta_b yourself if a
    WorldPose object is needed.
    """
    err = np.asarray(err, dtype=float)
    x, y, dx, dy = _derivatives(path, s_p, order=1)
    _check_regular(dx, dy)
    theta_f = np.arctan2(dy, dx)
    c, sn = np.cos(theta_f), np.sin(theta_f)
    wx = x + c * err[..., 0] - sn * err[..., 1]
    wy = y + sn * err[..., 0] + c * err[..., 1]
    theta_b = wrap_angle(err[..., 2] + theta_f)
    return np.stack([wx, wy, theta_b], axis=-1)
