# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must agree with ``_kernels_py`` to rounding error."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs, INFINITY

cnp.import_array()

cdef double SERIES_XI = 1e-5


def gpd_nll_derivs(const double[::1] y, const double[::1] eta, double xi):
    """GPD negative log-likelihood and derivatives with log-scale predictor.

    Returns ``(nll, g_eta, g_xi, h_ee, h_ex, h_xx)`` where ``g_eta``,
    ``h_ee`` and ``h_ex`` are per-row arrays and the rest are sums. ``nll``
    is ``inf`` when any excess lies beyond the upper endpoint.
    """
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] g_eta_a = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_ee_a = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_ex_a = np.empty(n)
    cdef double[::1] g_eta = g_eta_a
    cdef double[::1] h_ee = h_ee_a
    cdef double[::1] h_ex = h_ex_a
    cdef double nll = 0.0, g_xi = 0.0, h_xx = 0.0
    cdef double s, w, L, s2, s3, s4
    cdef bint series = fabs(xi) < SERIES_XI
    cdef double xi2 = xi * xi, xi3 = xi2 * xi

    for i in range(n):
        s = y[i] * exp(-eta[i])
        w = 1.0 + xi * s
        if w <= 0.0:
            return INFINITY, g_eta_a, 0.0, h_ee_a, h_ex_a, 0.0
        g_eta[i] = 1.0 - (1.0 + xi) * s / w
        h_ee[i] = (1.0 + xi) * s / (w * w)
        h_ex[i] = s * (s - 1.0) / (w * w)
        if series:
            s2 = s * s
            s3 = s2 * s
            s4 = s3 * s
            nll += eta[i] + s + xi * (s - 0.5 * s2) + xi2 * (s3 / 3.0 - 0.5 * s2) + xi3 * (s3 / 3.0 - 0.25 * s4)
            g_xi += (s - 0.5 * s2) + 2.0 * xi * (s3 / 3.0 - 0.5 * s2) + 3.0 * xi2 * (s3 / 3.0 - 0.25 * s4)
            h_xx += 2.0 * (s3 / 3.0 - 0.5 * s2) + 6.0 * xi * (s3 / 3.0 - 0.25 * s4)
        else:
            L = log1p(xi * s)
            nll += eta[i] + (1.0 / xi + 1.0) * L
            g_xi += -L / xi2 + (1.0 / xi + 1.0) * s / w
            h_xx += 2.0 * L / xi3 - 2.0 * s / (xi2 * w) - (1.0 + xi) * s * s / (xi * w * w)
    return nll, g_eta_a, g_xi, h_ee_a, h_ex_a, h_xx


def stationary_indices(Py_ssize_t n, double p, const double[::1] u, const cnp.int64_t[::1] starts):
    """Fill a stationary-bootstrap index vector from pre-drawn randomness.

    Position ``t`` opens a new block at ``starts[t]`` when ``u[t] < p``
    (always at ``t = 0``); otherwise it continues the previous block with
    circular wraparound.
    """
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_a = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_a
    cdef Py_ssize_t t
    if n == 0:
        return out_a
    out[0] = starts[0]
    for t in range(1, n):
        if u[t] < p:
            out[t] = starts[t]
        else:
            out[t] = out[t - 1] + 1
            if out[t] >= n:
                out[t] = 0
    return out_a
