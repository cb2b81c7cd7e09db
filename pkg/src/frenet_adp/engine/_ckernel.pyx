# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled rate kernel for the coupled closed-loop state.

Same math as the pure-numpy backend, with the grid sweep as plain C loops.
Summation order over grid points is the natural sequential order, fixed so
runs are bit-reproducible.
"""

from libc.math cimport atanh, cos, isfinite, sin, sqrt

import numpy as np


cdef double PHI_EPS = 1e-12

cdef enum:
    C_OK = 0
    C_ERR_PHI = 1
    C_ERR_NONFINITE = 2

# error codes surfaced to the python wrapper
OK = C_OK
ERR_PHI = C_ERR_PHI
ERR_NONFINITE = C_ERR_NONFINITE


cdef class CompiledKernel:
    cdef public int family, n_grid
    cdef double p0, p1, p2, p3
    cdef double k1, k2, v_des
    cdef double[:, ::1] Q, R, Rinv
    cdef double eta_c1, eta_c2, eta_a
    cdef double[:, :, ::1] A, SG
    cdef double[:, ::1] w0
    cdef double[::1] state_cost
    cdef double bound, layer_frac

    def __init__(self, pack):
        self.family = pack.family
        self.p0, self.p1, self.p2, self.p3 = pack.p0, pack.p1, pack.p2, pack.p3
        self.k1, self.k2, self.v_des = pack.k1, pack.k2, pack.v_des
        self.Q = np.ascontiguousarray(pack.Q)
        self.R = np.ascontiguousarray(pack.R)
        self.Rinv = np.ascontiguousarray(pack.Rinv)
        self.eta_c1, self.eta_c2, self.eta_a = pack.eta_c1, pack.eta_c2, pack.eta_a
        self.A = np.ascontiguousarray(pack.A)
        self.SG = np.ascontiguousarray(pack.SG)
        self.w0 = np.ascontiguousarray(pack.w0)
        self.state_cost = np.ascontiguousarray(pack.state_cost)
        self.n_grid = pack.n_grid
        self.bound = pack.bound
        self.layer_frac = pack.layer_frac

    cdef void geometry(self, double p, double *kappa, double *speed) noexcept nogil:
        cdef double dx, dy, ddx, ddy, speed_sq
        if self.family == 0:
            kappa[0] = 0.0
            speed[0] = 1.0
            return
        if self.family == 1:
            kappa[0] = 1.0 / self.p0
            speed[0] = self.p0
            return
        dx = self.p0 * self.p2 * cos(self.p2 * p)
        dy = self.p1 * self.p3 * cos(self.p3 * p)
        ddx = -self.p0 * self.p2 * self.p2 * sin(self.p2 * p)
        ddy = -self.p1 * self.p3 * self.p3 * sin(self.p3 * p)
        speed_sq = dx * dx + dy * dy
        speed[0] = sqrt(speed_sq)
        kappa[0] = (dx * ddy - dy * ddx) / (speed_sq * speed[0])

    cdef int _rates(self, double[::1] st, double[::1] out) noexcept nogil:
        cdef double s, y, th, phi, thb, sp, kappa, speed, ct, stheta
        cdef double target_rate, f1, f2, f3, f4
        cdef double g0, g1, g2, gv0, gv1, u0, u1
        cdef double zd0, zd1, zd2, zd3
        cdef double om[9]
        cdef double acc[9]
        cdef double omj[9]
        cdef double r_now, delta, p, wc_dot_scale
        cdef double ug0, ug1, dj, pj, scale, osq
        cdef double norm, inner, outward, t, alpha
        cdef int i, l, j

        s = st[0]; y = st[1]; th = st[2]; phi = st[3]; thb = st[6]

        if phi >= 1.0 - PHI_EPS or phi <= -1.0 + PHI_EPS:
            return C_ERR_PHI
        sp = atanh(phi) / self.k2
        self.geometry(sp, &kappa, &speed)

        ct = cos(th); stheta = sin(th)
        target_rate = self.v_des * ct + self.k1 * s
        f1 = kappa * y * self.v_des * ct + self.k1 * kappa * s * y - self.k1 * s
        f2 = self.v_des * stheta - kappa * s * self.v_des * ct - self.k1 * kappa * s * s
        f3 = kappa * self.v_des - kappa * target_rate
        f4 = self.k2 * (1.0 - phi * phi) * target_rate / speed

        # basis_jac(zeta)^T wa -> value-gradient estimate
        g0 = st[16] * y + st[17] * th + st[18] * phi + 2.0 * st[22] * s
        g1 = st[16] * s + st[19] * th + st[20] * phi + 2.0 * st[23] * y
        g2 = st[17] * s + st[19] * y + st[21] * phi + 2.0 * st[24] * th
        gv0 = ct * g0 + stheta * g1
        gv1 = g2
        u0 = -0.5 * (self.Rinv[0, 0] * gv0 + self.Rinv[0, 1] * gv1)
        u1 = -0.5 * (self.Rinv[1, 0] * gv0 + self.Rinv[1, 1] * gv1)

        zd0 = f1 + u0 * ct
        zd1 = f2 + u0 * stheta
        zd2 = f3 + u1
        zd3 = f4

        om[0] = y * zd0 + s * zd1
        om[1] = th * zd0 + s * zd2
        om[2] = phi * zd0 + s * zd3
        om[3] = th * zd1 + y * zd2
        om[4] = phi * zd1 + y * zd3
        om[5] = phi * zd2 + th * zd3
        om[6] = 2.0 * s * zd0
        om[7] = 2.0 * y * zd1
        om[8] = 2.0 * th * zd2

        r_now = (self.Q[0, 0] * s * s + self.Q[1, 1] * y * y + self.Q[2, 2] * th * th
                 + 2.0 * (self.Q[0, 1] * s * y + self.Q[0, 2] * s * th + self.Q[1, 2] * y * th)
                 + self.R[0, 0] * u0 * u0 + 2.0 * self.R[0, 1] * u0 * u1 + self.R[1, 1] * u1 * u1)
        delta = r_now
        osq = 0.0
        for l in range(9):
            delta += st[7 + l] * om[l]
            osq += om[l] * om[l]
        p = sqrt(1.0 + osq)

        # concurrent grid sweep, sequential order over j
        for l in range(9):
            acc[l] = 0.0
        for j in range(self.n_grid):
            ug0 = 0.0; ug1 = 0.0
            for l in range(9):
                ug0 += self.A[j, 0, l] * st[16 + l]
                ug1 += self.A[j, 1, l] * st[16 + l]
            dj = self.state_cost[j] + (self.R[0, 0] * ug0 * ug0
                                       + 2.0 * self.R[0, 1] * ug0 * ug1
                                       + self.R[1, 1] * ug1 * ug1)
            osq = 0.0
            for l in range(9):
                omj[l] = self.w0[j, l] + self.SG[j, l, 0] * ug0 + self.SG[j, l, 1] * ug1
                dj += st[7 + l] * omj[l]
                osq += omj[l] * omj[l]
            pj = sqrt(1.0 + osq)
            scale = dj / pj
            for l in range(9):
                acc[l] += omj[l] * scale

        wc_dot_scale = -self.eta_c1 * delta / p
        for l in range(9):
            out[7 + l] = wc_dot_scale * om[l] - (self.eta_c2 / self.n_grid) * acc[l]

        # smooth ball projection of the actor rate
        norm = 0.0
        for l in range(9):
            norm += st[16 + l] * st[16 + l]
        norm = sqrt(norm)
        inner = self.bound * (1.0 - self.layer_frac)
        for l in range(9):
            out[16 + l] = -self.eta_a * (st[16 + l] - st[7 + l])
        if norm > inner:
            outward = 0.0
            for l in range(9):
                outward += (st[16 + l] / norm) * out[16 + l]
            if outward > 0.0:
                t = (self.bound - norm) / (self.bound - inner)
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                alpha = t * t * (3.0 - 2.0 * t)
                for l in range(9):
                    out[16 + l] -= (1.0 - alpha) * outward * (st[16 + l] / norm)

        out[0] = zd0; out[1] = zd1; out[2] = zd2; out[3] = zd3
        out[4] = (u0 + self.v_des) * cos(thb)
        out[5] = (u0 + self.v_des) * sin(thb)
        out[6] = u1 + kappa * self.v_des

        for i in range(25):
            if not isfinite(out[i]):
                return C_ERR_NONFINITE
        return C_OK

    def rates_into(self, double[::1] state, double[::1] out):
        """Fill ``out`` with the state rate; returns an error code."""
        cdef int code
        with nogil:
            code = self._rates(state, out)
        return code
