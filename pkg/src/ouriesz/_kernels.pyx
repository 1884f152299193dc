# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel r-integrand reductions; same contract as ``_kernels_py.rho_reduce``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sqrt, fabs, M_PI

cnp.import_array()

cdef enum:
    MAXD = 16


cdef inline double _bracket(double z, double shifted, double wexp) nogil:
    if fabs(z) < 0.5:
        return wexp * expm1(z)
    return shifted - wexp


def rho_reduce(int kind, int deriv, int weight, x, y, int i, s, w):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] S = np.ascontiguousarray(s, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t N = X.shape[0], d = X.shape[1], ns = S.shape[0]
    if d > MAXD:
        raise ValueError("dimension too large for the compiled kernel")
    if Y.shape[0] != N or Y.shape[1] != d:
        raise ValueError("x and y must have the same shape")
    if not (0 <= kind <= 2 and 0 <= deriv <= 2 and 0 <= weight <= 2):
        raise ValueError("bad kernel code")
    if deriv == 0:
        out_np = np.zeros(N)
    else:
        out_np = np.zeros((N, d))
    cdef double[::1] out1
    cdef double[:, ::1] out2
    if deriv == 0:
        out1 = out_np
    else:
        out2 = out_np

    # node-only quantities, shared by every pair
    s_np = np.asarray(S)
    cdef const double[::1] RR = np.exp(-s_np * s_np)
    cdef const double[::1] AA = -np.expm1(-2.0 * s_np * s_np)
    cdef const double[::1] LA = np.log(AA)
    cdef const double[::1] INV_SQ = 1.0 / np.sqrt(AA)

    cdef double inv_sqrt_pi = 1.0 / sqrt(M_PI)
    cdef double pre = inv_sqrt_pi if kind == 0 else -2.0 * inv_sqrt_pi
    cdef double phi[MAXD]
    cdef double psi[MAXD]
    cdef double acc[MAXD]
    cdef double xx, yy, xy, wexp, r, a, la, isq, e_val, e_shift, p, ex, t, br, ph2, ps2, total
    cdef Py_ssize_t n, k, j

    with nogil:
        for n in range(N):
            xx = 0.0
            yy = 0.0
            xy = 0.0
            for j in range(d):
                xx += X[n, j] * X[n, j]
                yy += Y[n, j] * Y[n, j]
                xy += X[n, j] * Y[n, j]
            if weight == 1:
                wexp = exp(-xx)
            elif weight == 2:
                wexp = exp(-yy)
            else:
                wexp = 1.0
            total = 0.0
            for j in range(d):
                acc[j] = 0.0
            for k in range(ns):
                r = RR[k]
                a = AA[k]
                la = LA[k]
                isq = INV_SQ[k]
                e_val = r * (2.0 * xy - r * (xx + yy)) / a
                ph2 = 0.0
                ps2 = 0.0
                for j in range(d):
                    phi[j] = (r * Y[n, j] - X[n, j]) * isq
                    psi[j] = (r * X[n, j] - Y[n, j]) * isq
                    ph2 += phi[j] * phi[j]
                    ps2 += psi[j] * psi[j]
                if weight == 1:
                    e_shift = -ph2
                elif weight == 2:
                    e_shift = -ps2
                else:
                    e_shift = e_val

                if kind == 0:
                    if deriv == 0:
                        p = 0.5 * d
                        total += W[k] * _bracket(e_val - p * la, exp(e_shift - p * la), wexp)
                    else:
                        ex = -2.0 * r * exp(e_shift - 0.5 * (d + 1) * la) * W[k]
                        for j in range(d):
                            acc[j] += ex * (phi[j] if deriv == 2 else psi[j])
                elif kind == 1:
                    if deriv == 0:
                        total += W[k] * r * psi[i] * exp(e_shift - 0.5 * (d + 1) * la)
                    else:
                        ex = r * exp(e_shift - 0.5 * (d + 2) * la) * W[k]
                        for j in range(d):
                            if deriv == 2:
                                t = -2.0 * r * psi[i] * phi[j]
                                if j == i:
                                    t -= 1.0
                            else:
                                t = -2.0 * r * psi[i] * psi[j]
                                if j == i:
                                    t += r
                            acc[j] += ex * t
                else:
                    p = 0.5 * (d + 2)
                    ex = exp(e_shift - p * la)
                    if deriv == 0:
                        br = _bracket(e_val - p * la, ex, wexp)
                        total += W[k] * (r * Y[n, i] * ex - X[n, i] * br)
                    elif deriv == 2:
                        for j in range(d):
                            t = -2.0 * phi[i] * phi[j]
                            if j == i:
                                t += 1.0
                            acc[j] += W[k] * r * ex * t
                    else:
                        for j in range(d):
                            t = -2.0 * r * ex * phi[i] * psi[j]
                            if j == i:
                                t -= _bracket(e_val - p * la, ex, wexp)
                            acc[j] += W[k] * t
            if deriv == 0:
                out1[n] = pre * total
            else:
                for j in range(d):
                    out2[n, j] = pre * acc[j]
    return out_np
