"""Pure-numpy kernels.  Reference implementation and fallback."""

from __future__ import annotations

import numpy as np

_MAX_ITER = 200
_RTOL = 4.0 * np.finfo(float).eps


def monomial_eval(logk, self_coef, self_exp, C, EI, EJ, const):
    """Batch evaluation of F_i = a_i k_i^{e_i} + sum_j C_ij k_i^{EI_ij} k_j^{EJ_ij} + c_i.

    ``logk`` has shape (m, n); returns (m, n).
    """
    logk = np.atleast_2d(np.asarray(logk, dtype=float))
    x_i = logk[:, :, None]
    x_j = logk[:, None, :]
    cross = np.einsum("ij,mij->mi", C, np.exp(EI[None] * x_i + EJ[None] * x_j))
    return self_coef * np.exp(self_exp * logk) + cross + const


def invert_monotone(kappa, c, tau, lo, hi, increasing):
    """Solve t^kappa + c t = tau on [lo, hi] by geometric bisection.

    All of ``c``, ``tau``, ``lo``, ``hi`` and ``increasing`` broadcast to a
    common shape; the function must be monotone on each bracket.
    """
    c, tau, lo, hi, inc = np.broadcast_arrays(
        np.asarray(c, float), np.asarray(tau, float), np.asarray(lo, float),
        np.asarray(hi, float), np.asarray(increasing, bool)
    )
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    for _ in range(_MAX_ITER):
        active = hi > lo * (1.0 + _RTOL)
        if not active.any():
            break
        mid = np.sqrt(lo) * np.sqrt(hi)
        phi = np.exp(kappa * np.log(mid)) + c * mid - tau
        go_up = (phi < 0) == inc
        lo = np.where(active & go_up, mid, lo)
        hi = np.where(active & ~go_up, mid, hi)
    return np.sqrt(lo) * np.sqrt(hi)


def grid_vertex_values(axes, self_coef, self_exp, C, EI, EJ, const):
    """F on the tensor grid of log-coordinates ``axes`` (list of 1-D arrays).

    Returns an array of shape (n, g_1, ..., g_n).
    """
    n = len(axes)
    shape = tuple(len(a) for a in axes)
    out = np.empty((n,) + shape)

    def along(v, axis):
        sh = [1] * n
        sh[axis] = len(v)
        return v.reshape(sh)

    for i in range(n):
        acc = along(self_coef[i] * np.exp(self_exp[i] * axes[i]), i) + const[i]
        acc = np.broadcast_to(acc, shape).copy()
        for j in range(n):
            if C[i, j] == 0.0:
                continue
            if j == i:
                acc += along(C[i, i] * np.exp((EI[i, i] + EJ[i, i]) * axes[i]), i)
            else:
                tab = C[i, j] * np.exp(EI[i, j] * axes[i][:, None] + EJ[i, j] * axes[j][None, :])
                acc += _place(tab, i, j, n)
        out[i] = acc
    return out


def _place(tab, i, j, n):
    """Reshape a (g_i, g_j) table so it broadcasts over an n-d grid."""
    if i < j:
        sh = [1] * n
        sh[i], sh[j] = tab.shape
        return tab.reshape(sh)
    t = tab.T
    sh = [1] * n
    sh[j], sh[i] = t.shape
    return t.reshape(sh)


def flag_cells(values, trigger):
    """Flag grid cells where every component changes sign over the cell
    vertices, or where some vertex has max_i |F_i| below ``trigger``.

    ``values`` has shape (n, g_1, ..., g_n); returns the integer indices
    (lower-corner multi-indices) of flagged cells, shape (m, n).
    """
    n = values.shape[0]
    dims = values.shape[1:]
    cell_shape = tuple(d - 1 for d in dims)
    pos = values > 0
    near = np.max(np.abs(values), axis=0) < trigger
    flagged = np.ones(cell_shape, bool)
    any_near = np.zeros(cell_shape, bool)
    corners = np.array(np.meshgrid(*([[0, 1]] * n), indexing="ij")).reshape(n, -1).T
    for i in range(n):
        any_pos = np.zeros(cell_shape, bool)
        any_neg = np.zeros(cell_shape, bool)
        for corner in corners:
            sl = tuple(slice(c, c + d) for c, d in zip(corner, cell_shape))
            any_pos |= pos[i][sl]
            any_neg |= ~pos[i][sl]
            if i == 0:
                any_near |= near[sl]
        flagged &= any_pos & any_neg
    return np.argwhere(flagged | any_near)
