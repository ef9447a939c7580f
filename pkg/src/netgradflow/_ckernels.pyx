# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernels; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sin, fabs, isfinite, NAN

cnp.import_array()

cdef enum:
    OK = 0
    BELOW_FLOOR = 1
    NONPOSITIVE_STAGE = 2
    SINGULAR_STAGE = 3
    DOMAIN_VIOLATION = 4

cdef double SINGULAR_THRESHOLD = 1e-14


cdef inline double _phi2(int kind, double sigma, double u, int* bad) noexcept nogil:
    if kind == 0:
        return 1.0
    elif kind == 1:
        return exp(-u)
    elif kind == 2:
        if u <= -1.0:
            bad[0] = 1
            return NAN
        return 1.0 / (u + 1.0)
    elif kind == 3:
        return 1.0 / (u * u * (sin(u) + sigma) + 1.0)
    return u * u


cdef int _pde_multiplier(const double[::1] D, const double[::1] R, const double[::1] S,
                         double h, int kind, double sigma,
                         double[::1] u, double[::1] Mout) noexcept nogil:
    cdef Py_ssize_t n = D.shape[0], i
    cdef double half = 0.5 * h, f_prev, f_cur, g_prev, g_cur, V, p
    cdef int bad = 0
    for i in range(n):
        if not D[i] > 0.0:
            return NONPOSITIVE_STAGE
    u[n - 1] = 0.0
    f_prev = R[n - 1] / D[n - 1]
    for i in range(n - 2, -1, -1):
        f_cur = R[i] / D[i]
        u[i] = u[i + 1] + (f_cur + f_prev) * half
        f_prev = f_cur
    V = 0.0
    p = _phi2(kind, sigma, u[0], &bad)
    g_prev = p * S[0]
    Mout[0] = R[0] * V / (D[0] * D[0] * D[0])
    for i in range(1, n):
        p = _phi2(kind, sigma, u[i], &bad)
        g_cur = p * S[i]
        V = V + (g_cur + g_prev) * half
        g_prev = g_cur
        Mout[i] = R[i] * V / (D[i] * D[i] * D[i])
    if bad:
        return DOMAIN_VIOLATION
    return OK


def pde_advance(D, R, S, double h, ent, tableau, double dt, Py_ssize_t nsteps, double floor):
    cdef const double[::1] Rv = np.ascontiguousarray(R, dtype=np.float64)
    cdef const double[::1] Sv = np.ascontiguousarray(S, dtype=np.float64)
    cdef const double[:, ::1] Ae = np.ascontiguousarray(tableau.A_ex, dtype=np.float64)
    cdef const double[:, ::1] Ai = np.ascontiguousarray(tableau.A_im, dtype=np.float64)
    cdef const double[::1] bw = np.ascontiguousarray(tableau.b, dtype=np.float64)
    cdef int kind = ent.code
    cdef double sigma = ent.sigma
    cdef Py_ssize_t s = bw.shape[0]
    cdef Py_ssize_t n = Rv.shape[0]

    y_arr = np.array(D, dtype=np.float64)
    cdef double[::1] y = y_arr
    cdef double[::1] ynew = np.empty(n)
    cdef double[::1] yex = np.empty(n)
    cdef double[::1] u = np.empty(n)
    cdef double[:, ::1] K = np.empty((s, n))
    cdef double[:, ::1] Ms = np.empty((s, n))
    cdef char[::1] zero_row = np.zeros(s, dtype=np.int8)
    cdef Py_ssize_t step, i, j, k
    cdef int status = OK
    cdef double acc, den, mn, rejected = NAN
    cdef bint finite

    for i in range(s):
        zero_row[i] = 1
        for j in range(i):
            if Ae[i, j] != 0.0:
                zero_row[i] = 0

    with nogil:
        for step in range(nsteps):
            for i in range(s):
                if zero_row[i]:
                    if i == 0:
                        status = _pde_multiplier(y, Rv, Sv, h, kind, sigma, u, Ms[0])
                        if status != OK:
                            break
                    else:
                        Ms[i, :] = Ms[0, :]
                else:
                    for k in range(n):
                        acc = 0.0
                        for j in range(i):
                            acc = acc + Ae[i, j] * K[j, k]
                        yex[k] = y[k] + dt * acc
                    status = _pde_multiplier(yex, Rv, Sv, h, kind, sigma, u, Ms[i])
                    if status != OK:
                        break
                for k in range(n):
                    acc = 0.0
                    for j in range(i):
                        acc = acc + Ai[i, j] * K[j, k]
                    den = 1.0 - dt * Ai[i, i] * Ms[i, k]
                    if fabs(den) < SINGULAR_THRESHOLD:
                        status = SINGULAR_STAGE
                        break
                    K[i, k] = Ms[i, k] * ((y[k] + dt * acc) / den)
                if status != OK:
                    break
            if status != OK:
                break
            finite = True
            mn = 1e308
            for k in range(n):
                acc = 0.0
                for j in range(s):
                    acc = acc + bw[j] * K[j, k]
                ynew[k] = y[k] + dt * acc
                if not isfinite(ynew[k]):
                    finite = False
                elif ynew[k] < mn:
                    mn = ynew[k]
            if not finite or mn <= floor:
                status = BELOW_FLOOR
                rejected = mn if finite else NAN
                break
            y[:] = ynew
    return y_arr, (step if status != OK else nsteps), status, rejected


cdef inline int _delta_multipliers(double D1, double D2, double a, double b, double x0, double x1,
                                   int kind, double sigma, double* M1, double* M2) noexcept nogil:
    cdef int bad = 0
    cdef double ux1 = (a - b) * (1.0 - x1) / D2
    cdef double ux0 = a * (x1 - x0) / D1 + ux1
    cdef double p0 = _phi2(kind, sigma, ux0, &bad)
    cdef double p1 = _phi2(kind, sigma, ux1, &bad)
    M1[0] = a * a * p0 / (D1 * D1 * D1)
    M2[0] = (a - b) * (a * p0 - b * p1) / (D2 * D2 * D2)
    return DOMAIN_VIOLATION if bad else OK


def delta_advance(state, double a, double b, double x0, double x1, ent, tableau,
                  double dt, Py_ssize_t nsteps):
    cdef const double[:, ::1] Ae = np.ascontiguousarray(tableau.A_ex, dtype=np.float64)
    cdef const double[:, ::1] Ai = np.ascontiguousarray(tableau.A_im, dtype=np.float64)
    cdef const double[::1] bw = np.ascontiguousarray(tableau.b, dtype=np.float64)
    cdef int kind = ent.code
    cdef double sigma = ent.sigma
    cdef Py_ssize_t s = bw.shape[0]
    cdef double y1 = float(state[0]), y2 = float(state[1])
    cdef double[::1] K1 = np.empty(s), K2 = np.empty(s)
    cdef double[::1] M1s = np.empty(s), M2s = np.empty(s)
    cdef char[::1] zero_row = np.zeros(s, dtype=np.int8)
    cdef Py_ssize_t step, i, j
    cdef int status = OK
    cdef double e1, e2, r1, r2, d1, d2, n1 = NAN, n2 = NAN

    for i in range(s):
        zero_row[i] = 1
        for j in range(i):
            if Ae[i, j] != 0.0:
                zero_row[i] = 0

    with nogil:
        for step in range(nsteps):
            for i in range(s):
                if zero_row[i]:
                    if i == 0:
                        status = _delta_multipliers(y1, y2, a, b, x0, x1, kind, sigma, &M1s[0], &M2s[0])
                    else:
                        M1s[i] = M1s[0]
                        M2s[i] = M2s[0]
                else:
                    e1 = 0.0
                    e2 = 0.0
                    for j in range(i):
                        e1 = e1 + Ae[i, j] * K1[j]
                        e2 = e2 + Ae[i, j] * K2[j]
                    status = _delta_multipliers(y1 + dt * e1, y2 + dt * e2, a, b, x0, x1,
                                                kind, sigma, &M1s[i], &M2s[i])
                if status != OK:
                    break
                r1 = 0.0
                r2 = 0.0
                for j in range(i):
                    r1 = r1 + Ai[i, j] * K1[j]
                    r2 = r2 + Ai[i, j] * K2[j]
                d1 = 1.0 - dt * Ai[i, i] * M1s[i]
                d2 = 1.0 - dt * Ai[i, i] * M2s[i]
                if fabs(d1) < SINGULAR_THRESHOLD or fabs(d2) < SINGULAR_THRESHOLD:
                    status = SINGULAR_STAGE
                    break
                K1[i] = M1s[i] * ((y1 + dt * r1) / d1)
                K2[i] = M2s[i] * ((y2 + dt * r2) / d2)
            if status != OK:
                break
            e1 = 0.0
            e2 = 0.0
            for j in range(s):
                e1 = e1 + bw[j] * K1[j]
                e2 = e2 + bw[j] * K2[j]
            n1 = y1 + dt * e1
            n2 = y2 + dt * e2
            if not (isfinite(n1) and isfinite(n2)) or n1 <= 0.0 or n2 <= 0.0:
                status = BELOW_FLOOR
                break
            y1 = n1
            y2 = n2
    if status == BELOW_FLOOR:
        rejected = np.array([n1, n2])
    else:
        rejected = np.array([NAN, NAN])
    return np.array([y1, y2]), (step if status != OK else nsteps), status, rejected
