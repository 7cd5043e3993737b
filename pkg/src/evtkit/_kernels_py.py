"""Pure numpy implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

SERIES_XI = 1e-5


def gpd_nll_derivs(y, eta, xi):
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi = float(xi)
    s = y * np.exp(-eta)
    w = 1.0 + xi * s
    if np.any(w <= 0.0):
        n = y.shape[0]
        return np.inf, np.empty(n), 0.0, np.empty(n), np.empty(n), 0.0
    g_eta = 1.0 - (1.0 + xi) * s / w
    h_ee = (1.0 + xi) * s / (w * w)
    h_ex = s * (s - 1.0) / (w * w)
    if abs(xi) < SERIES_XI:
        s2 = s * s
        s3 = s2 * s
        s4 = s3 * s
        a1 = s - 0.5 * s2
        a2 = s3 / 3.0 - 0.5 * s2
        a3 = s3 / 3.0 - 0.25 * s4
        nll = np.sum(eta + s + xi * a1 + xi**2 * a2 + xi**3 * a3)
        g_xi = np.sum(a1 + 2.0 * xi * a2 + 3.0 * xi**2 * a3)
        h_xx = np.sum(2.0 * a2 + 6.0 * xi * a3)
    else:
        L = np.log1p(xi * s)
        nll = np.sum(eta + (1.0 / xi + 1.0) * L)
        g_xi = np.sum(-L / xi**2 + (1.0 / xi + 1.0) * s / w)
        h_xx = np.sum(2.0 * L / xi**3 - 2.0 * s / (xi**2 * w) - (1.0 + xi) * s * s / (xi * w * w))
    return float(nll), g_eta, float(g_xi), h_ee, h_ex, float(h_xx)


def stationary_indices(n, p, u, starts):
    n = int(n)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    u = np.asarray(u, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    new_block = u < p
    new_block[0] = True
    block_id = np.cumsum(new_block) - 1
    first_pos = np.flatnonzero(new_block)
    offset = np.arange(n) - first_pos[block_id]
    return (starts[first_pos][block_id] + offset) % n
