"""Numba-compiled kernels, signature-compatible with ``_numpy``."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_MAX_ITER = 200
_RTOL = 4.0 * np.finfo(np.float64).eps


@njit(cache=True)
def _monomial_eval(logk, self_coef, self_exp, C, EI, EJ, const):
    m, n = logk.shape
    out = np.empty((m, n))
    for b in range(m):
        for i in range(n):
            xi = logk[b, i]
            acc = self_coef[i] * math.exp(self_exp[i] * xi) + const[i]
            for j in range(n):
                c = C[i, j]
                if c != 0.0:
                    acc += c * math.exp(EI[i, j] * xi + EJ[i, j] * logk[b, j])
            out[b, i] = acc
    return out


def monomial_eval(logk, self_coef, self_exp, C, EI, EJ, const):
    logk = np.ascontiguousarray(np.atleast_2d(np.asarray(logk, dtype=float)))
    return _monomial_eval(logk, self_coef, self_exp, C, EI, EJ, const)


@njit(cache=True)
def _invert(kappa, c, tau, lo, hi, inc):
    # Newton in u = log t, safeguarded by the shrinking bracket [ua, ub]
    m = c.shape[0]
    out = np.empty(m)
    for k in range(m):
        ua = math.log(lo[k])
        ub = math.log(hi[k])
        u = 0.5 * (ua + ub)
        for _ in range(_MAX_ITER):
            if ub - ua <= _RTOL:
                break
            ek = math.exp(kappa * u)
            e1 = math.exp(u)
            phi = ek + c[k] * e1 - tau[k]
            if phi == 0.0:
                ua = ub = u
                break
            if (phi < 0.0) == inc[k]:
                ua = u
            else:
                ub = u
            d = kappa * ek + c[k] * e1
            un = u - phi / d if d != 0.0 else 0.5 * (ua + ub)
            if not (ua < un < ub):
                un = 0.5 * (ua + ub)
            if abs(un - u) <= _RTOL * max(1.0, abs(u)):
                u = un
                break
            u = un
        out[k] = math.exp(u)
    return out


def invert_monotone(kappa, c, tau, lo, hi, increasing):
    c, tau, lo, hi, inc = np.broadcast_arrays(
        np.asarray(c, float), np.asarray(tau, float), np.asarray(lo, float),
        np.asarray(hi, float), np.asarray(increasing, bool)
    )
    shape = c.shape
    flat = [np.array(a).ravel() for a in (c, tau, lo, hi, inc)]
    return _invert(float(kappa), *flat).reshape(shape)


@njit(cache=True)
def _vertex_values(X, self_coef, self_exp, C, EI, EJ, const):
    # X: (n, g) axes; grid is g^n in row-major order.  The system is
    # separable in pairs, so exponentials come from (g, g) tables.
    n, g = X.shape
    diag = np.empty((n, g))
    pair = np.zeros((n, n, g, g))
    for i in range(n):
        for a in range(g):
            xi = X[i, a]
            diag[i, a] = self_coef[i] * math.exp(self_exp[i] * xi) + const[i]
            if C[i, i] != 0.0:
                diag[i, a] += C[i, i] * math.exp((EI[i, i] + EJ[i, i]) * xi)
        for j in range(n):
            if j == i or C[i, j] == 0.0:
                continue
            for a in range(g):
                for b in range(g):
                    pair[i, j, a, b] = C[i, j] * math.exp(EI[i, j] * X[i, a] + EJ[i, j] * X[j, b])
    # Last axis innermost: the prefix part of each sum is hoisted out.
    last = n - 1
    blocks = g ** last
    out = np.empty((n, blocks * g))
    idx = np.zeros(n, np.int64)
    for i in range(n):
        row = out[i]
        idx[:] = 0
        for blk in range(blocks):
            off = blk * g
            if i != last:
                ii = idx[i]
                base = diag[i, ii]
                for j in range(last):
                    if j != i:
                        base += pair[i, j, ii, idx[j]]
                for b in range(g):
                    row[off + b] = base + pair[i, last, ii, b]
            else:
                for b in range(g):
                    acc = diag[i, b]
                    for j in range(last):
                        acc += pair[i, j, b, idx[j]]
                    row[off + b] = acc
            a = last - 1
            while a >= 0:
                idx[a] += 1
                if idx[a] < g:
                    break
                idx[a] = 0
                a -= 1
    return out


def grid_vertex_values(axes, self_coef, self_exp, C, EI, EJ, const):
    lengths = {len(a) for a in axes}
    if len(lengths) != 1:
        from . import _numpy

        return _numpy.grid_vertex_values(axes, self_coef, self_exp, C, EI, EJ, const)
    n = len(axes)
    g = len(axes[0])
    X = np.ascontiguousarray(np.vstack(axes))
    vals = _vertex_values(X, self_coef, self_exp, C, EI, EJ, const)
    return vals.reshape((n,) + (g,) * n)


@njit(cache=True)
def _flag(vals, g, trigger):
    n, total = vals.shape
    full = (1 << n) - 1
    # bit i: F_i > 0 at the vertex; bit n: vertex is near a zero
    mask = np.zeros(total, np.int32)
    near_bit = 1 << n
    for v in range(total):
        mk = 0
        mx = 0.0
        for i in range(n):
            x = vals[i, v]
            if x > 0.0:
                mk |= 1 << i
            if abs(x) > mx:
                mx = abs(x)
        if mx < trigger:
            mk |= near_bit
        mask[v] = mk
    stride = np.empty(n, np.int64)
    st = 1
    for a in range(n - 1, -1, -1):
        stride[a] = st
        st *= g
    ncorner = 1 << n
    offs = np.zeros(ncorner, np.int64)
    for corner in range(ncorner):
        for a in range(n):
            if (corner >> (n - 1 - a)) & 1:
                offs[corner] += stride[a]
    cells = (g - 1) ** n
    flags = np.zeros(cells, np.bool_)
    cidx = np.zeros(n, np.int64)
    for cell in range(cells):
        v0 = 0
        for a in range(n):
            v0 += cidx[a] * stride[a]
        any_pos = 0
        all_pos = full
        for corner in range(ncorner):
            mk = mask[v0 + offs[corner]]
            any_pos |= mk
            all_pos &= mk
        flags[cell] = (any_pos & near_bit) != 0 or ((any_pos & full) == full and all_pos == 0)
        a = n - 1
        while a >= 0:
            cidx[a] += 1
            if cidx[a] < g - 1:
                break
            cidx[a] = 0
            a -= 1
    return flags


def flag_cells(values, trigger):
    n = values.shape[0]
    g = values.shape[1]
    if any(d != g for d in values.shape[1:]):
        from . import _numpy

        return _numpy.flag_cells(values, trigger)
    flags = _flag(np.ascontiguousarray(values.reshape(n, -1)), g, float(trigger))
    return np.argwhere(flags.reshape((g - 1,) * n))
