"""Deterministic fixed-step integration of the coupled closed-loop system.

One shared classical Runge-Kutta step advances the error state, the world
pose, and both weight vectors together; the learning laws are ordinary
differential equations and splitting them from the state would introduce an
unstated approximation.  After every step the heading error is re-wrapped,
the path state is checked against its open interval, and the actor weights
are rescaled onto their ball if the discrete step nudged them outside.

There is no randomness anywhere: repeated runs with the same configuration
produce bit-identical logs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import engine
from .adp import ActorWeights, CostSpec, LearningGains, SampleGrid, basis_jacobian, local_cost
from .dynamics import ErrorState, GainSet, drift_f, input_g, sp_from_phi
from .errors import NonFiniteRate, PhiOutOfRange
from .geometry import PathSpec, frenet_error, path_curvature, world_from_frenet, wrap_angle

_PHI_EPS = 1e-12

#: CSV column order, fixed. Floats are written with 17 significant digits.
CSV_COLUMNS = (
    ["t", "s", "y", "theta", "phi", "x", "y_world", "theta_b", "sp", "v_e", "w_e", "v", "w", "delta", "r", "cost"]
    + [f"wc{i}" for i in range(1, 10)]
    + [f"wa{i}" for i in range(1, 10)]
)


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    dt: float = 0.005
    duration: float = 60.0
    log_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least one step")
        if int(self.log_stride) < 1:
            raise ValueError("log_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.duration / self.dt)))


@dataclass(frozen=True)
class ActorCriticConfig:
    """Learning setup: gains, stored-state grid, initial weights, projection."""

    learn: LearningGains
    grid: SampleGrid
    wc0: np.ndarray
    wa0: np.ndarray
    proj_bound: float
    layer_frac: float = 0.01


@dataclass
class TrajectoryLog:
    """Sampled time series of one closed-loop run.

    ``cost`` is the running trapezoidal accumulation of the instantaneous
    cost ``r`` over the logged samples.  On abort the log holds every sample
    up to and including the last valid state.
    """

    t: np.ndarray
    zeta: np.ndarray
    pose: np.ndarray
    sp: np.ndarray
    u: np.ndarray
    total: np.ndarray
    delta: np.ndarray
    r: np.ndarray
    cost: np.ndarray
    wc: np.ndarray
    wa: np.ndarray
    aborted: bool = False
    abort_reason: str | None = None
    abort_time: float | None = None

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.column_stack(
            [
                self.t,
                self.zeta,
                self.pose,
                self.sp,
                self.u,
                self.total,
                self.delta,
                self.r,
                self.cost,
                self.wc,
                self.wa,
            ]
        )

    def write_csv(self, path) -> None:
        np.savetxt(path, self.as_matrix(), fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS), comments="")


def rk4_step(state, rate_fn, dt: float):
    """One classical 4th-order Runge-Kutta step of an autonomous system.

    Raises NonFiniteRate if any stage produces NaN or infinity.
    """
    state = np.asarray(state, dtype=float)
    k1 = np.asarray(rate_fn(state), dtype=float)
    k2 = np.asarray(rate_fn(state + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(rate_fn(state + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(rate_fn(state + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NonFiniteRate("rate evaluation produced a non-finite value")
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def run_simulation(
    path: PathSpec,
    gains: GainSet,
    cost: CostSpec,
    ac: ActorCriticConfig,
    sim: SimConfig,
    zeta0,
    backend: str | None = None,
) -> TrajectoryLog:
    """Integrate the closed loop from zeta0 and return the sampled log.

    The initial world pose is reconstructed from zeta0 by placing the
    virtual target at the parameter implied by phi(0) and inverting the
    frame transform.  On PhiOutOfRange or NonFiniteRate the run stops and
    the partial log is returned with the abort recorded.
    """
    z0 = ErrorState(*np.asarray(zeta0, dtype=float))
    wa0 = ActorWeights(ac.wa0, ac.proj_bound, ac.layer_frac)
    pack = engine.KernelPack.build(path, gains, cost, ac.learn, ac.grid, ac.proj_bound, ac.layer_frac)
    kernel = engine.select_backend(pack, prefer=backend)

    sp0 = float(sp_from_phi(z0.phi, gains))
    state = np.empty(engine.NSTATE)
    state[engine.ZETA] = np.asarray(z0)
    state[engine.POSE] = world_from_frenet(path, sp0, np.asarray(z0)[:3])
    state[engine.WC] = np.asarray(ac.wc0, dtype=float).reshape(9)
    state[engine.WA] = wa0.w

    dt, stride, n_steps = sim.dt, int(sim.log_stride), sim.n_steps
    rows = [state.copy()]
    times = [0.0]
    aborted, reason, abort_time = False, None, None

    for i in range(n_steps):
        prev = state
        try:
            state = rk4_step(state, kernel.rates, dt)
            state[2] = float(wrap_angle(state[2]))
            if not abs(state[3]) < 1.0 - _PHI_EPS:
                raise PhiOutOfRange(f"phi = {state[3]}")
            wa_norm = float(np.linalg.norm(state[engine.WA]))
            if wa_norm > ac.proj_bound:
                state[engine.WA] *= ac.proj_bound / wa_norm
        except (PhiOutOfRange, NonFiniteRate) as exc:
            aborted = True
            abort_time = (i + 1) * dt
            reason = f"{type(exc).__name__} at t = {abort_time:.6g} s: {exc}"
            if times[-1] != i * dt:
                rows.append(prev.copy())
                times.append(i * dt)
            break
        if (i + 1) % stride == 0 or (i + 1) == n_steps:
            rows.append(state.copy())
            times.append((i + 1) * dt)

    return _assemble_log(
        np.asarray(times), np.asarray(rows), path, gains, cost, aborted=aborted, reason=reason, abort_time=abort_time
    )


def _assemble_log(t, states, path, gains, cost, aborted=False, reason=None, abort_time=None) -> TrajectoryLog:
    """Vectorized computation of the logged output channels."""
    Z = states[:, engine.ZETA]
    PO = states[:, engine.POSE]
    WCm = states[:, engine.WC]
    WAm = states[:, engine.WA]

    sp = sp_from_phi(Z[:, 3], gains)
    kappa = path_curvature(path, sp)
    S = basis_jacobian(Z)
    grad = np.einsum("nlk,nl->nk", S, WAm)
    g = input_g(Z)
    gv = np.einsum("nkj,nk->nj", g, grad)
    u = -0.5 * np.einsum("ij,nj->ni", cost.Rinv, gv)
    zdot = drift_f(Z, path, gains) + np.einsum("nkj,nj->nk", g, u)
    omega = np.einsum("nlk,nk->nl", S, zdot)
    r = local_cost(Z, u, cost)
    delta = r + np.einsum("nl,nl->n", omega, WCm)
    total = np.column_stack([u[:, 0] + gains.v_des, u[:, 1] + kappa * gains.v_des])
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(t))])

    return TrajectoryLog(
        t=t,
        zeta=Z,
        pose=PO,
        sp=np.asarray(sp),
        u=u,
        total=total,
        delta=delta,
        r=r,
        cost=acc,
        wc=WCm,
        wa=WAm,
        aborted=aborted,
        abort_reason=reason,
        abort_time=abort_time,
    )


def accumulated_cost(log: TrajectoryLog) -> float:
    """Trapezoidal accumulation of the logged instantaneous cost."""
    if log.n < 2:
        raise ValueError("need at least two logged samples")
    return float(np.trapezoid(log.r, log.t))


def frenet_world_consistency(log: TrajectoryLog, path: PathSpec) -> float:
    """Cross-validate the two integrations carried by a log.

    At every sample the error state is recomputed from the integrated world
    pose and the integrated path parameter; the largest absolute discrepancy
    against the integrated error state (heading compared on the circle) is
    returned.  Shrinks at 4th order in the step size.
    """
    if log.n == 0:
        return 0.0
    fe = frenet_error(path, log.sp, log.pose)
    dev_sy = np.abs(fe[:, :2] - log.zeta[:, :2])
    dev_th = np.abs(np.asarray(wrap_angle(fe[:, 2] - log.zeta[:, 2])))
    return float(max(dev_sy.max(), dev_th.max()))
