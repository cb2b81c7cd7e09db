"""Closed-loop error dynamics of the unicycle around a moving virtual target.

The state is zeta = (s, y, theta, phi): along-track error, cross-track
error, heading error, and the bounded path state phi = tanh(k2 * s_p),
where s_p is the path parameter of the virtual target.  The closed loop is
control affine,

    zeta_dot = f(zeta) + g(zeta) u,      u = (v_e, w_e),

with u the deviation from the steady-state input (v_des, kappa*v_des)
needed to stay on the path.  The virtual target progresses along the path
at the arc-length rate v_des*cos(theta) + k1*s, which is defined for every
state; in particular there is no 1/(1 - kappa*y) singularity anywhere in
this module.  On paths that are not arc-length parametrized the parameter
rate is that law divided by the parametric speed ||r'(s_p)||, which keeps
the error dynamics the exact Frenet-frame image of the world kinematics
(the two integrations are cross-validated in the simulator).

All operations are vectorized over a leading batch axis of zeta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PhiOutOfRange
from .geometry import (
    PathSpec,
    path_curvature,
    path_curvature_rate,
    path_speed,
    path_speed_rate,
    wrap_angle,
)

# Margin inside the open interval (-1, 1) beyond which phi is rejected.
PHI_EPS = 1e-12


@dataclass
class ErrorState:
    """State (s, y, theta, phi); theta wrapped, phi strictly inside (-1, 1)."""

    s: float
    y: float
    theta: float
    phi: float

    def __post_init__(self):
        self.theta = float(wrap_angle(self.theta))
        if not abs(self.phi) < 1.0:
            raise PhiOutOfRange(f"phi must lie strictly in (-1, 1), got {self.phi}")

    def __array__(self, dtype=None, copy=None):
        return np.array([self.s, self.y, self.theta, self.phi], dtype=dtype or float)


@dataclass(frozen=True)
class GainSet:
    """Virtual-target gain k1, path-state gain k2, desired speed v_des."""

    k1: float
    k2: float
    v_des: float

    def __post_init__(self):
        for name in ("k1", "k2", "v_des"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ControlInput:
    """Deviation input (v_e, w_e) on top of the steady-state control."""

    v_e: float
    w_e: float

    def __array__(self, dtype=None, copy=None):
        return np.array([self.v_e, self.w_e], dtype=dtype or float)


def sp_from_phi(phi, gains: GainSet):
    """Recover the path parameter from phi: atanh(phi) / k2.

    Raises PhiOutOfRange within 1e-12 of saturation, where the inverse is
    numerically meaningless.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any(np.abs(phi) >= 1.0 - PHI_EPS):
        raise PhiOutOfRange("phi within 1e-12 of saturation")
    return np.arctanh(phi) / gains.k2


def _split(zeta):
    zeta = np.asarray(zeta, dtype=float)
    return zeta[..., 0], zeta[..., 1], zeta[..., 2], zeta[..., 3]


def virtual_target_rate(zeta, gains: GainSet):
    """Arc-length progression rate of the virtual target:
    v_des*cos(theta) + k1*s.  Well defined for every state."""
    s, _, theta, _ = _split(zeta)
    return gains.v_des * np.cos(theta) + gains.k1 * s


def phi_rate(zeta, path: PathSpec, gains: GainSet):
    """Rate of the bounded path state,

        k2 * (1 - phi^2) * (v_des cos(theta) + k1 s) / ||r'(s_p)||.

    (1 - phi^2) equals sech^2(atanh(phi)) but stays stable near |phi| = 1;
    the parametric-speed division converts the target's arc-length rate to
    a parameter rate (it is 1 on arc-length parametrized paths such as the
    line).  The rate vanishes as |phi| -> 1, so (-1, 1) is forward
    invariant.
    """
    s, _, theta, phi = _split(zeta)
    if np.any(np.abs(phi) >= 1.0):
        raise PhiOutOfRange("phi left (-1, 1)")
    speed = path_speed(path, sp_from_phi(phi, gains))
    return gains.k2 * (1.0 - phi * phi) * virtual_target_rate(zeta, gains) / speed


def drift_f(zeta, path: PathSpec, gains: GainSet):
    """Drift f(zeta) of the closed-loop system, shape (..., 4).

    Curvature and parametric speed are evaluated at the virtual target's
    parameter, recovered from phi.  The error components of f vanish
    identically when (s, y, theta) = 0.
    """
    s, y, theta, phi = _split(zeta)
    sp = sp_from_phi(phi, gains)
    kappa = path_curvature(path, sp)
    speed = path_speed(path, sp)
    k1, k2, v = gains.k1, gains.k2, gains.v_des
    ct, st = np.cos(theta), np.sin(theta)
    f1 = kappa * y * v * ct + k1 * kappa * s * y - k1 * s
    f2 = v * st - kappa * s * v * ct - k1 * kappa * s * s
    f3 = kappa * v - kappa * (v * ct + k1 * s)
    f4 = k2 * (1.0 - phi * phi) * (v * ct + k1 * s) / speed
    return np.stack([f1, f2, f3, f4], axis=-1)


def input_g(zeta):
    """Input matrix g(zeta), shape (..., 4, 2).

    Columns (cos theta, sin theta, 0, 0) and (0, 0, 1, 0); g^T g = I2.
    """
    zeta = np.asarray(zeta, dtype=float)
    theta = zeta[..., 2]
    g = np.zeros(zeta.shape[:-1] + (4, 2))
    g[..., 0, 0] = np.cos(theta)
    g[..., 1, 0] = np.sin(theta)
    g[..., 2, 1] = 1.0
    return g


def drift_jacobian(zeta, path: PathSpec, gains: GainSet, u=None):
    """Analytic state Jacobian of f(zeta) + g(zeta)u, shape (..., 4, 4).

    With u omitted (or zero) this is the Jacobian of the drift alone.  Used
    by the collocation solver; checked against finite differences in tests.
    """
    s, y, theta, phi = _split(zeta)
    sp = sp_from_phi(phi, gains)
    kappa = path_curvature(path, sp)
    speed = path_speed(path, sp)
    # d/d(phi) of curvature and speed, through s_p = atanh(phi)/k2
    dsp = 1.0 / (gains.k2 * (1.0 - phi * phi))
    dk = path_curvature_rate(path, sp) * dsp
    dspeed = path_speed_rate(path, sp) * dsp
    k1, k2, v = gains.k1, gains.k2, gains.v_des
    ct, st = np.cos(theta), np.sin(theta)
    sech2 = 1.0 - phi * phi
    target = v * ct + k1 * s

    J = np.zeros(np.shape(kappa) + (4, 4))
    J[..., 0, 0] = k1 * kappa * y - k1
    J[..., 0, 1] = kappa * v * ct + k1 * kappa * s
    J[..., 0, 2] = -kappa * y * v * st
    J[..., 0, 3] = dk * (y * v * ct + k1 * s * y)
    J[..., 1, 0] = -kappa * v * ct - 2.0 * k1 * kappa * s
    J[..., 1, 2] = v * ct + kappa * s * v * st
    J[..., 1, 3] = dk * (-s * v * ct - k1 * s * s)
    J[..., 2, 0] = -kappa * k1
    J[..., 2, 2] = kappa * v * st
    J[..., 2, 3] = dk * (v - v * ct - k1 * s)
    J[..., 3, 0] = k2 * sech2 * k1 / speed
    J[..., 3, 2] = -k2 * sech2 * v * st / speed
    J[..., 3, 3] = -2.0 * k2 * phi * target / speed - k2 * sech2 * target * dspeed / (speed * speed)
    if u is not None:
        u = np.asarray(u, dtype=float)
        J[..., 0, 2] += -u[..., 0] * st
        J[..., 1, 2] += u[..., 0] * ct
    return J


def steady_state_control(zeta, path: PathSpec, gains: GainSet):
    """Nominal input (v_ss, w_ss) = (v_des, kappa*v_des) to remain on the path."""
    _, _, _, phi = _split(zeta)
    kappa = np.asarray(path_curvature(path, sp_from_phi(phi, gains)), dtype=float)
    return np.stack([np.full_like(kappa, gains.v_des), kappa * gains.v_des], axis=-1)


def total_control(u, ss):
    """Total input applied to the vehicle: deviation plus steady state."""
    return np.asarray(u, dtype=float) + np.asarray(ss, dtype=float)


def world_kinematics(pose, v, w):
    """Unicycle pose rate (v cos theta_b, v sin theta_b, w), shape (..., 3)."""
    pose = np.asarray(pose, dtype=float)
    theta_b = pose[..., 2]
    v = np.asarray(v, dtype=float)
    w = np.broadcast_to(np.asarray(w, dtype=float), np.shape(theta_b))
    return np.stack([v * np.cos(theta_b), v * np.sin(theta_b), w], axis=-1)
