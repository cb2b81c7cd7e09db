"""Pure-numpy rate kernel; the fallback when the compiled extension is absent.

The scalar part of the computation runs on plain floats (cheaper than 0-d
numpy arrays); the grid sweep is vectorized.  Must stay numerically
equivalent to the compiled kernel -- parity is pinned by tests.
"""

from __future__ import annotations

import math

import numpy as np

from ..adp import project_rate
from ..errors import NonFiniteRate, PhiOutOfRange
from .pack import KernelPack, make_scalar_geometry

_PHI_EPS = 1e-12


class PythonBackend:
    name = "python"

    def __init__(self, pack: KernelPack):
        self.pack = pack
        self._geometry = make_scalar_geometry(pack)

    def rates(self, state: np.ndarray) -> np.ndarray:
        # overflow/invalid deliberately propagate to the final finite check
        with np.errstate(over="ignore", invalid="ignore"):
            return self._rates(state)

    def _rates(self, state: np.ndarray) -> np.ndarray:
        P = self.pack
        s, y, th, phi = state[0], state[1], state[2], state[3]
        thb = state[6]
        wc = state[7:16]
        wa = state[16:25]

        if abs(phi) >= 1.0 - _PHI_EPS:
            raise PhiOutOfRange(f"phi = {phi} at rate evaluation")
        sp = math.atanh(phi) / P.k2
        kappa, speed = self._geometry(sp)

        k1, k2, v = P.k1, P.k2, P.v_des
        ct, st = math.cos(th), math.sin(th)
        target_rate = v * ct + k1 * s
        f1 = kappa * y * v * ct + k1 * kappa * s * y - k1 * s
        f2 = v * st - kappa * s * v * ct - k1 * kappa * s * s
        f3 = kappa * v - kappa * target_rate
        f4 = k2 * (1.0 - phi * phi) * target_rate / speed

        # value-gradient estimate basis_jac(zeta)^T wa, unrolled
        g0 = wa[0] * y + wa[1] * th + wa[2] * phi + 2.0 * wa[6] * s
        g1 = wa[0] * s + wa[3] * th + wa[4] * phi + 2.0 * wa[7] * y
        g2 = wa[1] * s + wa[3] * y + wa[5] * phi + 2.0 * wa[8] * th
        gv0 = ct * g0 + st * g1
        gv1 = g2
        Ri = P.Rinv
        u0 = -0.5 * (Ri[0, 0] * gv0 + Ri[0, 1] * gv1)
        u1 = -0.5 * (Ri[1, 0] * gv0 + Ri[1, 1] * gv1)

        zd0 = f1 + u0 * ct
        zd1 = f2 + u0 * st
        zd2 = f3 + u1
        zd3 = f4

        omega = np.array(
            [
                y * zd0 + s * zd1,
                th * zd0 + s * zd2,
                phi * zd0 + s * zd3,
                th * zd1 + y * zd2,
                phi * zd1 + y * zd3,
                phi * zd2 + th * zd3,
                2.0 * s * zd0,
                2.0 * y * zd1,
                2.0 * th * zd2,
            ]
        )
        Q = P.Q
        R = P.R
        r_now = (
            Q[0, 0] * s * s
            + Q[1, 1] * y * y
            + Q[2, 2] * th * th
            + 2.0 * (Q[0, 1] * s * y + Q[0, 2] * s * th + Q[1, 2] * y * th)
            + R[0, 0] * u0 * u0
            + 2.0 * R[0, 1] * u0 * u1
            + R[1, 1] * u1 * u1
        )
        delta = r_now + float(wc @ omega)
        p = math.sqrt(1.0 + float(omega @ omega))

        u_grid = np.einsum("nil,l->ni", P.A, wa)
        om_grid = P.w0 + np.einsum("nlj,nj->nl", P.SG, u_grid)
        d_grid = P.state_cost + np.einsum("ni,ij,nj->n", u_grid, R, u_grid) + om_grid @ wc
        p_grid = np.sqrt(1.0 + np.einsum("nl,nl->n", om_grid, om_grid))
        grid_term = om_grid.T @ (d_grid / p_grid)

        wc_dot = (-P.eta_c1 * delta / p) * omega - (P.eta_c2 / P.n_grid) * grid_term
        wa_dot = project_rate(wa, -P.eta_a * (wa - wc), P.bound, P.layer_frac)

        v_tot = u0 + v
        w_tot = u1 + kappa * v

        out = np.empty(25)
        out[0], out[1], out[2], out[3] = zd0, zd1, zd2, zd3
        out[4] = v_tot * math.cos(thb)
        out[5] = v_tot * math.sin(thb)
        out[6] = w_tot
        out[7:16] = wc_dot
        out[16:25] = wa_dot
        if not np.all(np.isfinite(out)):
            raise NonFiniteRate("non-finite closed-loop rate")
        return out
