"""Value/policy approximation and concurrent-learning update laws.

The value function is approximated as V_hat = wc . basis(zeta) and the
policy as u_hat = -1/2 R^-1 g^T basis_jac^T wa, with a fixed basis of
nine quadratic monomials in zeta: the six bilinear pairs followed by the
squares of the three error coordinates.  The squares carry the diagonal
feedback (speed from along-track error, steering from heading error) and
vanish in gradient at the origin, so any weight vector leaves the
on-path state an equilibrium of the policy; phi itself is never squared,
matching the zero cost weight on path progress.

The critic weights descend the normalized Bellman residual both at the
current state and, concurrently, at a fixed grid of stored states.  The
stored-state sum replaces a persistent-excitation requirement: as long as
the grid's regressor outer-product sum stays full rank (see
:func:`rank_check`), the instantaneous data need not be exciting.  The
actor weights chase the critic under a smooth ball projection.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import GainSet, drift_f, input_g
from .geometry import PathSpec

#: Number of basis features.
L = 9

#: Index pairs of the bilinear features, then the squared feature indices.
_BILINEAR = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_SQUARED = (0, 1, 2)


def basis(zeta):
    """Feature vector of the value approximation, shape (..., 9).

    Order: z1*z2, z1*z3, z1*z4, z2*z3, z2*z4, z3*z4, z1^2, z2^2, z3^2.
    basis(0) = 0 and basis_jacobian(0) = 0, so the approximate value and
    policy both vanish at the target for every weight vector.
    """
    z = np.asarray(zeta, dtype=float)
    cols = [z[..., i] * z[..., j] for i, j in _BILINEAR]
    cols += [z[..., i] * z[..., i] for i in _SQUARED]
    return np.stack(cols, axis=-1)


def basis_jacobian(zeta):
    """Jacobian of :func:`basis` with respect to zeta, shape (..., 9, 4)."""
    z = np.asarray(zeta, dtype=float)
    J = np.zeros(z.shape[:-1] + (L, 4))
    for row, (i, j) in enumerate(_BILINEAR):
        J[..., row, i] = z[..., j]
        J[..., row, j] = z[..., i]
    for row, i in enumerate(_SQUARED):
        J[..., 6 + row, i] = 2.0 * z[..., i]
    return J


@dataclass(frozen=True)
class CostSpec:
    """Quadratic running-cost weights.

    Q (3x3, symmetric positive definite) weights the error (s, y, theta)
    only; its 4x4 embedding used against the full state carries a zero row
    and column so progress along the path is never penalized.  R (2x2,
    symmetric positive definite) weights the deviation input.
    """

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        for name, M, n in (("Q", Q, 3), ("R", R, 2)):
            if M.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
            if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
                raise ValueError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(M)[0] <= 0.0:
                raise ValueError(f"{name} must be positive definite")

    @classmethod
    def identity(cls) -> "CostSpec":
        return cls(Q=np.eye(3), R=np.eye(2))

    @property
    def Qbar(self) -> np.ndarray:
        """4x4 embedding of Q with zero weight on the phi direction."""
        Qb = np.zeros((4, 4))
        Qb[:3, :3] = self.Q
        return Qb

    @property
    def Rinv(self) -> np.ndarray:
        return np.linalg.inv(self.R)

    @property
    def q_lower(self) -> float:
        """Smallest eigenvalue of Q (the error-cost lower bound)."""
        return float(np.linalg.eigvalsh(self.Q)[0])

    @property
    def q_upper(self) -> float:
        return float(np.linalg.eigvalsh(self.Q)[-1])


@dataclass(frozen=True)
class LearningGains:
    """Critic gains (instantaneous and stored-state) and actor gain."""

    eta_c1: float
    eta_c2: float
    eta_a: float

    def __post_init__(self):
        for name in ("eta_c1", "eta_c2", "eta_a"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class CriticWeights:
    """Value-function weight estimate."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(L)
        if not np.all(np.isfinite(self.w)):
            raise ValueError("critic weights must be finite")


@dataclass
class ActorWeights:
    """Policy weight estimate confined to a ball of radius ``bound``.

    Weights given outside the ball are scaled back onto its boundary at
    construction, so the invariant ||w|| <= bound holds from the start.
    ``layer_frac`` sets the smooth boundary layer (fraction of the radius)
    over which the outward component of an update is faded to zero.
    """

    w: np.ndarray
    bound: float
    layer_frac: float = 0.01

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).reshape(L).copy()
        if not self.bound > 0.0:
            raise ValueError("projection bound must be positive")
        if not 0.0 < self.layer_frac < 1.0:
            raise ValueError("layer_frac must lie in (0, 1)")
        n = float(np.linalg.norm(self.w))
        if n > self.bound:
            self.w *= self.bound / n


@dataclass
class SampleGrid:
    """Stored states for concurrent learning, shape (N, 4).

    The default is the 3x3x3x3 product grid about the origin with
    s, y in {-1, 0, 1}, theta in {-pi/4, 0, pi/4} and phi in
    {-0.9, 0, 0.9}; full rank of the regressor sum is verified at runtime
    rather than assumed.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ValueError("grid points must have shape (N, 4)")
        if pts.shape[0] < L:
            raise ValueError(f"need at least {L} grid points, got {pts.shape[0]}")
        if np.any(np.abs(pts[:, 3]) >= 1.0):
            raise ValueError("grid phi values must lie strictly in (-1, 1)")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        """True if the point set is closed under negation."""
        pts = {tuple(np.round(p / tol) * tol) for p in self.points}
        return pts == {tuple(np.round(-np.asarray(p) / tol) * tol) for p in pts}

    @classmethod
    def from_axes(cls, s_vals, y_vals, theta_vals, phi_vals) -> "SampleGrid":
        pts = np.array(list(itertools.product(s_vals, y_vals, theta_vals, phi_vals)), dtype=float)
        return cls(points=pts)

    @classmethod
    def default(cls) -> "SampleGrid":
        quarter = np.pi / 4.0
        return cls.from_axes((-1.0, 0.0, 1.0), (-1.0, 0.0, 1.0), (-quarter, 0.0, quarter), (-0.9, 0.0, 0.9))


def local_cost(zeta, u, cost: CostSpec):
    """Running cost r(zeta, u) = e^T Q e + u^T R u (phi carries no weight)."""
    z = np.asarray(zeta, dtype=float)
    u = np.asarray(u, dtype=float)
    e = z[..., :3]
    return np.einsum("...i,ij,...j->...", e, cost.Q, e) + np.einsum("...i,ij,...j->...", u, cost.R, u)


def value_hat(wc, zeta):
    """Approximate value wc . basis(zeta)."""
    w = wc.w if isinstance(wc, CriticWeights) else np.asarray(wc, dtype=float)
    return basis(zeta) @ w


def policy_hat(wa, zeta, cost: CostSpec):
    """Approximate policy -1/2 R^-1 g^T basis_jac^T wa, shape (..., 2)."""
    w = wa.w if isinstance(wa, ActorWeights) else np.asarray(wa, dtype=float)
    grad = np.einsum("...lk,l->...k", basis_jacobian(zeta), w)
    gv = np.einsum("...kj,...k->...j", input_g(zeta), grad)
    return -0.5 * np.einsum("ij,...j->...i", cost.Rinv, gv)


class BellmanResidual(NamedTuple):
    """Residual delta, its critic-weight gradient (the regressor omega),
    and the normalization p = sqrt(1 + omega.omega)."""

    delta: float
    omega: np.ndarray
    p: float


def bellman_error(wc, wa, zeta, path: PathSpec, gains: GainSet, cost: CostSpec) -> BellmanResidual:
    """Measurable Bellman residual at one state.

    delta = r(zeta, u_hat) + wc . omega with omega = basis_jac (f + g u_hat);
    this equals the approximate Hamiltonian since the optimal Hamiltonian is
    identically zero.  ||omega / p|| <= 1 by construction.
    """
    wc = wc.w if isinstance(wc, CriticWeights) else np.asarray(wc, dtype=float)
    u = policy_hat(wa, zeta, cost)
    f = drift_f(zeta, path, gains)
    gu = np.einsum("...kj,...j->...k", input_g(zeta), u)
    omega = np.einsum("...lk,...k->...l", basis_jacobian(zeta), f + gu)
    delta = local_cost(zeta, u, cost) + omega @ wc
    p = np.sqrt(1.0 + np.einsum("...l,...l->...", omega, omega))
    return BellmanResidual(delta=delta, omega=omega, p=p)


def hamiltonian_hat(wc, wa, zeta, path: PathSpec, gains: GainSet, cost: CostSpec):
    """Approximate Hamiltonian r(zeta, u_hat) + wc . basis_jac (f + g u_hat).

    Identical to the Bellman residual delta.
    """
    return bellman_error(wc, wa, zeta, path, gains, cost).delta


class GridWorkspace:
    """Per-grid tensors that do not change while the weights evolve.

    For stored states zeta_j the drift f_j, input g_j, feature Jacobian
    S_j and error cost e_j^T Q e_j are fixed; only the policy at zeta_j
    moves with the actor weights.  Precomputing

        SG_j = S_j g_j            (maps u_j to omega_j minus the drift part)
        A_j  = -1/2 R^-1 SG_j^T   (maps wa to u_j)
        w0_j = S_j f_j            (drift part of omega_j)

    reduces each grid sweep to three small einsums.
    """

    def __init__(self, grid: SampleGrid, path: PathSpec, gains: GainSet, cost: CostSpec):
        self.grid = grid
        self.cost = cost
        pts = grid.points
        S = basis_jacobian(pts)
        f = drift_f(pts, path, gains)
        g = input_g(pts)
        self.SG = np.ascontiguousarray(np.einsum("nlk,nkj->nlj", S, g))
        self.A = np.ascontiguousarray(-0.5 * np.einsum("ij,nlj->nil", cost.Rinv, self.SG))
        self.w0 = np.ascontiguousarray(np.einsum("nlk,nk->nl", S, f))
        self.state_cost = np.ascontiguousarray(
            np.einsum("ni,ij,nj->n", pts[:, :3], cost.Q, pts[:, :3])
        )
        self.R = np.ascontiguousarray(cost.R)

    def residuals(self, wc, wa):
        """Vectorized Bellman residual over the grid: (delta_j, omega_j, p_j)."""
        u = np.einsum("nil,l->ni", self.A, wa)
        omega = self.w0 + np.einsum("nlj,nj->nl", self.SG, u)
        delta = self.state_cost + np.einsum("ni,ij,nj->n", u, self.R, u) + omega @ wc
        p = np.sqrt(1.0 + np.einsum("nl,nl->n", omega, omega))
        return delta, omega, p

    def regressor_sum(self, wa):
        """The symmetric PSD matrix sum_j omega_j omega_j^T / p_j."""
        u = np.einsum("nil,l->ni", self.A, wa)
        omega = self.w0 + np.einsum("nlj,nj->nl", self.SG, u)
        p = np.sqrt(1.0 + np.einsum("nl,nl->n", omega, omega))
        return np.einsum("nl,nm,n->lm", omega, omega, 1.0 / p)


def critic_rate(
    wc,
    wa,
    zeta,
    grid: SampleGrid,
    learn: LearningGains,
    path: PathSpec,
    gains: GainSet,
    cost: CostSpec,
    workspace: GridWorkspace | None = None,
):
    """Critic weight rate: normalized residual descent at the current state
    plus the averaged descent over the stored grid,

        -eta_c1 * omega * delta / p - (eta_c2 / N) * sum_j omega_j * delta_j / p_j.
    """
    wc = wc.w if isinstance(wc, CriticWeights) else np.asarray(wc, dtype=float)
    wa_vec = wa.w if isinstance(wa, ActorWeights) else np.asarray(wa, dtype=float)
    if workspace is None:
        workspace = GridWorkspace(grid, path, gains, cost)
    delta, omega, p = bellman_error(wc, wa_vec, zeta, path, gains, cost)
    dj, oj, pj = workspace.residuals(wc, wa_vec)
    grid_term = (oj * (dj / pj)[:, None]).sum(axis=0)
    return -learn.eta_c1 * omega * delta / p - (learn.eta_c2 / grid.n) * grid_term


def project_rate(w, raw, bound: float, layer_frac: float = 0.01):
    """Smooth ball projection of a weight rate.

    Strictly inside radius bound*(1 - layer_frac) the rate passes through.
    Approaching the boundary, the outward radial component is faded to zero
    by a smoothstep in the norm, reaching zero at (and beyond) the radius;
    inward and tangential components are never altered.  Consequently
    ||projected|| <= ||raw|| and the ball is forward invariant.
    """
    w = np.asarray(w, dtype=float)
    raw = np.asarray(raw, dtype=float)
    norm = float(np.linalg.norm(w))
    inner = bound * (1.0 - layer_frac)
    if norm <= inner:
        return raw
    unit = w / norm
    outward = float(unit @ raw)
    if outward <= 0.0:
        return raw
    t = min(max((bound - norm) / (bound - inner), 0.0), 1.0)
    alpha = t * t * (3.0 - 2.0 * t)
    return raw - (1.0 - alpha) * outward * unit


def actor_rate(wa, wc, eta_a: float, bound: float | None = None, layer_frac: float | None = None):
    """Projected actor rate proj{-eta_a (wa - wc)}.

    With ``wa`` an :class:`ActorWeights`, its bound and layer are used;
    otherwise pass ``bound`` (and optionally ``layer_frac``) explicitly.
    """
    if isinstance(wa, ActorWeights):
        bound = wa.bound if bound is None else bound
        layer_frac = wa.layer_frac if layer_frac is None else layer_frac
        wa = wa.w
    if bound is None:
        raise ValueError("projection bound required")
    wa = np.asarray(wa, dtype=float)
    wc = wc.w if isinstance(wc, CriticWeights) else np.asarray(wc, dtype=float)
    raw = -eta_a * (wa - wc)
    return project_rate(wa, raw, bound, 0.01 if layer_frac is None else layer_frac)


def rank_check(
    grid: SampleGrid,
    wa,
    path: PathSpec,
    gains: GainSet,
    cost: CostSpec,
    workspace: GridWorkspace | None = None,
    rel_tol: float = 1e-10,
):
    """Rank and smallest eigenvalue of sum_j omega_j omega_j^T / p_j.

    Full rank (= 9) with a positive smallest eigenvalue is the stored-data
    richness condition under which the critic converges without persistent
    excitation.  Eigenvalues below rel_tol times the largest are counted as
    zero.  Returns (rank, c_lower).
    """
    wa_vec = wa.w if isinstance(wa, ActorWeights) else np.asarray(wa, dtype=float)
    if workspace is None:
        workspace = GridWorkspace(grid, path, gains, cost)
    M = workspace.regressor_sum(wa_vec)
    eig = np.linalg.eigvalsh(0.5 * (M + M.T))
    rank = int(np.sum(eig > rel_tol * max(eig[-1], 0.0)))
    return rank, float(eig[0])


@dataclass(frozen=True)
class GainConditionReport:
    """Margins of the two sufficient gain inequalities (diagnostic only).

    Condition 1: q_lower               >  eta_c1 * eps_bound * lf / 2
    Condition 2: c_lower  >  N*eta_a/(2*eta_c2) + N*eta_c1*eps_bound*lf/(2*eta_c2)

    ``eps_bound`` bounds the gradient of the value reconstruction error and
    is unknowable in practice; it is supplied by the caller (0 gives the
    limiting form of both conditions).
    """

    q_lower: float
    cond1_rhs: float
    cond1_margin: float
    cond1_ok: bool
    c_lower: float
    cond2_rhs: float
    cond2_margin: float
    cond2_ok: bool


def gain_condition_check(
    cost: CostSpec,
    learn: LearningGains,
    c_lower: float,
    n_grid: int,
    eps_bound: float,
    lf_estimate: float,
) -> GainConditionReport:
    """Evaluate both sufficient gain inequalities and report margins."""
    rhs1 = learn.eta_c1 * eps_bound * lf_estimate / 2.0
    rhs2 = n_grid * learn.eta_a / (2.0 * learn.eta_c2) + n_grid * learn.eta_c1 * eps_bound * lf_estimate / (
        2.0 * learn.eta_c2
    )
    q = cost.q_lower
    return GainConditionReport(
        q_lower=q,
        cond1_rhs=rhs1,
        cond1_margin=q - rhs1,
        cond1_ok=q > rhs1,
        c_lower=c_lower,
        cond2_rhs=rhs2,
        cond2_margin=c_lower - rhs2,
        cond2_ok=c_lower > rhs2,
    )


def estimate_lf(
    path: PathSpec,
    gains: GainSet,
    box=((-1.0, 1.0), (-1.0, 1.0), (-np.pi, np.pi), (-0.95, 0.95)),
    n_per_axis: int = 9,
) -> float:
    """Deterministic estimate of the drift growth bound sup ||f|| / ||zeta||.

    Samples a regular grid over ``box`` (skipping the origin) and returns
    the largest ratio.  Used only by the gain-condition diagnostic.
    """
    axes = [np.linspace(lo, hi, n_per_axis) for lo, hi in box]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
    norms = np.linalg.norm(pts, axis=1)
    pts = pts[norms > 1e-9]
    f = drift_f(pts, path, gains)
    return float(np.max(np.linalg.norm(f, axis=1) / np.linalg.norm(pts, axis=1)))
