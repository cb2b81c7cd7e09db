"""Offline optimal-control oracle: trapezoidal direct collocation.

The finite-horizon quadratic cost is minimized over states and deviation
controls at equally spaced nodes, with the dynamics enforced as trapezoidal
defect constraints handled by quadratic penalty continuation: each outer
round multiplies the penalty weight by a fixed factor and re-minimizes.
The penalized objective is an exact sum of squares (weighted cost residuals
plus weighted defects), so the inner minimizer is a damped Gauss-Newton
iteration whose normal equations are block tridiagonal in the node
variables and solved in O(nodes).  Jacobians are fully analytic; no
external solver is involved, and the result is deterministic.

The solution is independent of the learned controller -- the initial guess
is a zero-control rollout of the drift -- so it can serve as the oracle the
online policy is judged against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adp import CostSpec
from .dynamics import ErrorState, GainSet, drift_f, drift_jacobian, input_g, sp_from_phi
from .errors import MismatchedScenario, NotConverged, PhiOutOfRange
from .geometry import PathSpec, path_curvature, world_from_frenet, wrap_angle
from .sim import CSV_COLUMNS, TrajectoryLog, rk4_step


@dataclass(frozen=True)
class CollocationProblem:
    """Discretization and solver settings for one scenario."""

    zeta0: np.ndarray
    nodes: int = 120
    horizon: float = 60.0
    penalty_init: float = 10.0
    penalty_factor: float = 10.0
    rounds: int = 8
    grad_tol: float = 1e-6
    max_inner: int = 200
    defect_tol: float = 1e-6
    outer_grad_tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "zeta0", np.asarray(ErrorState(*np.asarray(self.zeta0, dtype=float))))
        if self.nodes < 2:
            raise ValueError("need at least two collocation nodes")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class RoundStats:
    penalty: float
    cost: float
    defect_norm: float
    grad_norm: float
    iterations: int


@dataclass
class CollocationResult:
    """Locally optimal trajectory and solve diagnostics."""

    t: np.ndarray
    zeta: np.ndarray
    u: np.ndarray
    pose: np.ndarray
    sp: np.ndarray
    total: np.ndarray
    r: np.ndarray
    cost: float
    defect_norm: float
    grad_norm: float
    rounds: list[RoundStats] = field(default_factory=list)

    def write_csv(self, path) -> None:
        """Same schema as the simulation log minus the weight columns.

        The Bellman-residual column does not apply to the oracle and is
        written as zero.
        """
        acc = np.concatenate([[0.0], np.cumsum(0.5 * (self.r[1:] + self.r[:-1]) * np.diff(self.t))])
        mat = np.column_stack(
            [self.t, self.zeta, self.pose, self.sp, self.u, self.total, np.zeros(self.t.shape[0]), self.r, acc]
        )
        np.savetxt(path, mat, fmt="%.17g", delimiter=",", header=",".join(CSV_COLUMNS[:16]), comments="")


class _PenaltyObjective:
    """Trapezoidal cost plus mu/2 * ||defects||^2 over packed variables.

    Variables: controls at every node and states at nodes 1..K-1 (the
    initial state is pinned).  Value and gradient are evaluated with
    batched array expressions.
    """

    def __init__(self, problem: CollocationProblem, path: PathSpec, gains: GainSet, cost: CostSpec):
        self.path, self.gains, self.cost = path, gains, cost
        self.z0 = problem.zeta0
        self.K = problem.nodes
        self.h = problem.horizon / (problem.nodes - 1)
        w = np.ones(self.K)
        w[0] = w[-1] = 0.5
        self.w = w
        self.Qbar = cost.Qbar
        self.R = cost.R

    def unpack(self, z):
        K = self.K
        U = z[: 2 * K].reshape(K, 2)
        X = z[2 * K :].reshape(K - 1, 4)
        zeta = np.vstack([self.z0[None, :], X])
        return zeta, U

    def pack(self, zeta, U):
        return np.concatenate([U.ravel(), zeta[1:].ravel()])

    def _dynamics(self, zeta, U):
        F = drift_f(zeta, self.path, self.gains) + np.einsum("nkj,nj->nk", input_g(zeta), U)
        D = zeta[1:] - zeta[:-1] - 0.5 * self.h * (F[1:] + F[:-1])
        return F, D

    def cost_only(self, zeta, U):
        r = np.einsum("ni,ij,nj->n", zeta, self.Qbar, zeta) + np.einsum("ni,ij,nj->n", U, self.R, U)
        return self.h * float(self.w @ r)

    def value(self, z, mu):
        zeta, U = self.unpack(z)
        try:
            _, D = self._dynamics(zeta, U)
        except PhiOutOfRange:
            return math.inf
        val = self.cost_only(zeta, U) + 0.5 * mu * float(np.sum(D * D))
        return val if math.isfinite(val) else math.inf

    def value_grad(self, z, mu):
        zeta, U = self.unpack(z)
        F, D = self._dynamics(zeta, U)
        val = self.cost_only(zeta, U) + 0.5 * mu * float(np.sum(D * D))

        A = drift_jacobian(zeta, self.path, self.gains, u=U)
        B = input_g(zeta)
        dprev = np.vstack([np.zeros((1, 4)), D])
        dcur = np.vstack([D, np.zeros((1, 4))])
        dsum = dprev + dcur

        gU = 2.0 * self.h * self.w[:, None] * (U @ self.R) - 0.5 * self.h * mu * np.einsum("nkj,nk->nj", B, dsum)
        gZ = (
            2.0 * self.h * self.w[:, None] * (zeta @ self.Qbar)
            + mu * (dprev - dcur)
            - 0.5 * self.h * mu * np.einsum("nji,nj->ni", A, dsum)
        )
        return val, np.concatenate([gU.ravel(), gZ[1:].ravel()]), D

    def initial_guess(self):
        """Zero-control rollout of the drift, integrated node to node."""
        zeta = np.empty((self.K, 4))
        zeta[0] = self.z0
        rate = lambda z: drift_f(z, self.path, self.gains)
        for k in range(self.K - 1):
            zeta[k + 1] = rk4_step(zeta[k], rate, self.h)
            zeta[k + 1, 2] = float(wrap_angle(zeta[k + 1, 2]))
        return self.pack(zeta, np.zeros((self.K, 2)))


class _BlockTridiagonal:
    """Symmetric block-tridiagonal system over the node variable blocks.

    Block 0 holds u_0 only (the initial state is pinned); blocks 1..K-1
    hold (zeta_k, u_k).  Solved by block forward elimination and back
    substitution.
    """

    def __init__(self, K: int):
        self.K = K
        self.sizes = [2] + [6] * (K - 1)
        self.diag = [np.zeros((n, n)) for n in self.sizes]
        self.upper = [np.zeros((self.sizes[k], self.sizes[k + 1])) for k in range(K - 1)]
        self.rhs = [np.zeros(n) for n in self.sizes]

    def solve(self, damping: float):
        K = self.K
        C = [D + damping * np.diag(np.maximum(np.diag(D), 1e-12)) for D in self.diag]
        y = [r.copy() for r in self.rhs]
        gains = []
        for k in range(K - 1):
            Ck = C[k]
            gain = np.linalg.solve(Ck, self.upper[k])
            y_k = np.linalg.solve(Ck, y[k])
            C[k + 1] = C[k + 1] - self.upper[k].T @ gain
            y[k + 1] = y[k + 1] - self.upper[k].T @ y_k
            gains.append((gain, y_k))
        x = [None] * K
        x[K - 1] = np.linalg.solve(C[K - 1], y[K - 1])
        for k in range(K - 2, -1, -1):
            gain, y_k = gains[k]
            x[k] = y_k - gain @ x[k + 1]
        return x


def _gauss_newton(obj: _PenaltyObjective, z, mu, grad_tol, max_iter):
    """Damped Gauss-Newton on the penalized least-squares objective.

    The penalty value is an exact sum of squares, so the Gauss-Newton
    normal matrix is assembled block-tridiagonally from the cost weights
    and the defect Jacobians; a Levenberg-Marquardt damping parameter is
    adapted on acceptance/rejection of each trial step.
    """
    K, h = obj.K, obj.h
    sqw = np.sqrt(obj.h * obj.w)
    damping = 1e-6
    val = obj.value(z, mu)
    it = 0
    while it < max_iter:
        zeta, U = obj.unpack(z)
        F, D = obj._dynamics(zeta, U)
        A = drift_jacobian(zeta, obj.path, obj.gains, u=U)
        B = input_g(zeta)
        sd = math.sqrt(0.5 * mu)

        # gradient of P = sum r^2 is 2 J^T r; assemble g = -J^T r per block
        sys = _BlockTridiagonal(K)
        hw = h * obj.w
        Qbar, R = obj.Qbar, obj.R
        for k in range(K):
            if k == 0:
                sys.diag[0] += hw[0] * R
                sys.rhs[0] -= hw[0] * (R @ U[0])
            else:
                sys.diag[k][:4, :4] += hw[k] * Qbar
                sys.diag[k][4:, 4:] += hw[k] * R
                sys.rhs[k][:4] -= hw[k] * (Qbar @ zeta[k])
                sys.rhs[k][4:] -= hw[k] * (R @ U[k])
        for k in range(K - 1):
            Gz_l = sd * (-np.eye(4) - 0.5 * h * A[k])
            Gu_l = sd * (-0.5 * h * B[k])
            Gz_r = sd * (np.eye(4) - 0.5 * h * A[k + 1])
            Gu_r = sd * (-0.5 * h * B[k + 1])
            d = sd * D[k]
            if k == 0:
                left = Gu_l
            else:
                left = np.hstack([Gz_l, Gu_l])
            right = np.hstack([Gz_r, Gu_r])
            sys.diag[k] += left.T @ left
            sys.diag[k + 1] += right.T @ right
            sys.upper[k] += left.T @ right
            sys.rhs[k] -= left.T @ d
            sys.rhs[k + 1] -= right.T @ d

        grad_norm = 2.0 * math.sqrt(sum(float(r @ r) for r in sys.rhs))
        if grad_norm <= grad_tol:
            break

        accepted = False
        for _ in range(30):
            step = sys.solve(damping)
            z_new = z.copy()
            z_new[0:2] += step[0]
            for k in range(1, K):
                z_new[2 * K + 4 * (k - 1) : 2 * K + 4 * k] += step[k][:4]
                z_new[2 * k : 2 * k + 2] += step[k][4:]
            val_new = obj.value(z_new, mu)
            if val_new < val:
                accepted = True
                damping = max(damping / 3.0, 1e-12)
                z, val = z_new, val_new
                break
            damping = min(damping * 10.0, 1e12)
        it += 1
        if not accepted:
            break
    _, grad, _ = obj.value_grad(z, mu)
    return z, val, grad, it


def solve_collocation(
    problem: CollocationProblem, path: PathSpec, gains: GainSet, cost: CostSpec
) -> CollocationResult:
    """Minimize the trapezoidal cost subject to trapezoidal dynamics defects.

    Raises NotConverged (with the final defect and gradient norms) if the
    continuation finishes outside its tolerances: max-norm defect below
    ``defect_tol`` and gradient norm below ``outer_grad_tol``.
    """
    obj = _PenaltyObjective(problem, path, gains, cost)
    z = obj.initial_guess()
    mu = problem.penalty_init
    stats: list[RoundStats] = []
    for _ in range(problem.rounds):
        z, _, grad, it = _gauss_newton(obj, z, mu, problem.grad_tol, problem.max_inner)
        zeta, U = obj.unpack(z)
        _, D = obj._dynamics(zeta, U)
        stats.append(
            RoundStats(
                penalty=mu,
                cost=obj.cost_only(zeta, U),
                defect_norm=float(np.abs(D).max()),
                grad_norm=float(np.linalg.norm(grad)),
                iterations=it,
            )
        )
        mu *= problem.penalty_factor

    zeta, U = obj.unpack(z)
    _, D = obj._dynamics(zeta, U)
    defect_norm = float(np.abs(D).max())
    _, grad, _ = obj.value_grad(z, stats[-1].penalty)
    grad_norm = float(np.linalg.norm(grad))
    if defect_norm > problem.defect_tol or grad_norm > problem.outer_grad_tol:
        raise NotConverged(
            f"collocation stopped with defect {defect_norm:.3e}, gradient {grad_norm:.3e}",
            defect_norm=defect_norm,
            grad_norm=grad_norm,
        )

    sp = sp_from_phi(zeta[:, 3], gains)
    kappa = path_curvature(path, sp)
    pose = world_from_frenet(path, sp, zeta[:, :3])
    total = np.column_stack([U[:, 0] + gains.v_des, U[:, 1] + kappa * gains.v_des])
    r = np.einsum("ni,ij,nj->n", zeta, cost.Qbar, zeta) + np.einsum("ni,ij,nj->n", U, cost.R, U)
    t = np.linspace(0.0, problem.horizon, problem.nodes)
    return CollocationResult(
        t=t,
        zeta=zeta,
        u=U,
        pose=pose,
        sp=np.asarray(sp),
        total=total,
        r=r,
        cost=obj.cost_only(zeta, U),
        defect_norm=defect_norm,
        grad_norm=grad_norm,
        rounds=stats,
    )


@dataclass(frozen=True)
class ChannelDeviation:
    max: float
    rms: float


@dataclass
class ComparisonMetrics:
    """Per-channel deviations between the online run and the oracle,
    evaluated at the oracle's node times, plus the cost comparison."""

    channels: dict
    cost_adp: float
    cost_baseline: float
    cost_ratio: float

    def lines(self) -> list[str]:
        out = []
        for name, dev in self.channels.items():
            out.append(f"max_dev_{name} = {dev.max:.17g}")
            out.append(f"rms_dev_{name} = {dev.rms:.17g}")
        out.append(f"cost_adp = {self.cost_adp:.17g}")
        out.append(f"cost_baseline = {self.cost_baseline:.17g}")
        out.append(f"cost_ratio = {self.cost_ratio:.17g}")
        return out


def _deviation(diff) -> ChannelDeviation:
    diff = np.asarray(diff, dtype=float)
    return ChannelDeviation(max=float(np.abs(diff).max()), rms=float(np.sqrt(np.mean(diff * diff))))


def compare_trajectories(adp_log: TrajectoryLog, baseline: CollocationResult) -> ComparisonMetrics:
    """Deviation metrics between an online run and the collocation oracle.

    Both trajectories must share the initial state and horizon.  The dense
    log is linearly interpolated onto the oracle's node times; angles are
    compared on the circle.  Reports error-state, world-pose, and control
    channels.
    """
    if adp_log.n < 2:
        raise MismatchedScenario("simulation log is too short to compare")
    if np.abs(adp_log.zeta[0] - baseline.zeta[0]).max() > 1e-9:
        raise MismatchedScenario("initial states differ")
    if abs(adp_log.t[-1] - baseline.t[-1]) > 1e-9:
        raise MismatchedScenario("horizons differ")

    def resample(col):
        return np.interp(baseline.t, adp_log.t, col)

    channels = {}
    for i, name in enumerate(("s", "y", "theta", "phi")):
        diff = resample(adp_log.zeta[:, i]) - baseline.zeta[:, i]
        if name == "theta":
            diff = np.asarray(wrap_angle(diff))
        channels[name] = _deviation(diff)
    for i, name in enumerate(("x", "y_world", "theta_b")):
        diff = resample(adp_log.pose[:, i]) - baseline.pose[:, i]
        if name == "theta_b":
            diff = np.asarray(wrap_angle(diff))
        channels[name] = _deviation(diff)
    for i, name in enumerate(("v_e", "w_e")):
        channels[name] = _deviation(resample(adp_log.u[:, i]) - baseline.u[:, i])

    cost_adp = float(np.trapezoid(adp_log.r, adp_log.t))
    cost_base = baseline.cost
    if cost_base > 0.0:
        ratio = cost_adp / cost_base
    else:
        ratio = 1.0 if cost_adp <= 0.0 else math.inf
    return ComparisonMetrics(channels=channels, cost_adp=cost_adp, cost_baseline=cost_base, cost_ratio=ratio)
