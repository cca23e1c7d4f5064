"""Scalar maps f_i(t) = t^kappa + (alpha - eta_i) t and their monotone inverses.

Indices are 0-based in canonical (eta ascending) order.  The table mode
selects which of the four branch geometries applies:

``SUB_SMALL``    0 < kappa < 1, alpha < eta_n: f_n has an interior maximum A.
``SUB_LARGE``    0 < kappa < 1, alpha >= eta_n: every f_i is increasing.
``SUPER_SMALL``  kappa < 0, alpha <= eta_1: every f_i is decreasing.
``SUPER_LARGE``  kappa < 0, alpha > eta_1: f_1 has an interior minimum A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DomainError, RegimeError
from .params import DerivedExponents, Regime, SystemParams, Tolerances, close, derive

SUB_SMALL = "SUB_SMALL"
SUB_LARGE = "SUB_LARGE"
SUPER_SMALL = "SUPER_SMALL"
SUPER_LARGE = "SUPER_LARGE"

_TINY = float(np.finfo(float).tiny)
_DOMAIN_SLACK = 1e-13


def _kappa_of(exps) -> float:
    return float(exps.kappa if isinstance(exps, DerivedExponents) else exps)


def _pow(t, e):
    return np.exp(e * np.log(t))


def fScalar(t, i: int, alpha: float, exps, eta) -> float:
    """t^kappa + (alpha - eta_i) t."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise DomainError("t must be positive", code="NONPOSITIVE_T")
    out = _pow(t_arr, _kappa_of(exps)) + (alpha - np.asarray(eta, float)[i]) * t_arr
    return float(out) if out.ndim == 0 else out


def snap_alpha(alpha: float, eta, rel: float) -> float:
    """Replace alpha by eta_i when the two agree to relative ``rel``."""
    for e in np.asarray(eta, float):
        if close(alpha, float(e), rel):
            return float(e)
    return float(alpha)


@dataclass(frozen=True)
class Peak:
    A: float
    T: float
    pivotIndex: int  # 1-based, n for kappa in (0,1) and 1 for kappa < 0


def _peak_closed(kappa: float, gap: float) -> tuple[float, float]:
    """(A, T) for pivot gap = |alpha - eta_pivot| > 0."""
    r = 1.0 / (1.0 - kappa)
    m = abs(kappa)
    T = (m / gap) ** r
    sign = 1.0 if kappa > 0 else -1.0
    A = (m ** (kappa * r) - sign * m**r) / gap ** (kappa * r)
    return A, T


def _lower_bracket(kappa, c, tau, increasing):
    """Point where the branch sits strictly on the far side of tau."""
    c = np.asarray(c, float)
    tau = np.asarray(tau, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kappa > 0:
            a = np.exp(np.log(tau / 2.0) / kappa)
            b = np.where(c > 0, tau / (2.0 * np.where(c > 0, c, 1.0)), np.inf)
        else:
            a = np.exp(np.log(2.0 * tau) / kappa)
            b = np.where(c < 0, tau / np.where(c < 0, -c, 1.0), np.inf)
    return np.maximum(0.5 * np.minimum(a, b), _TINY)


@dataclass(frozen=True, eq=False)
class BranchTable:
    """Per-index branch data for one (eta, alpha, kappa)."""

    mode: str
    kappa: float
    alpha: float
    eta: np.ndarray
    peak: Peak | None
    S: np.ndarray
    Tprime: np.ndarray
    TdoublePrime: np.ndarray
    hasK: np.ndarray
    tol: Tolerances

    @property
    def n(self) -> int:
        return len(self.eta)

    @property
    def c(self) -> np.ndarray:
        return self.alpha - self.eta

    @property
    def A(self) -> float:
        return self.peak.A if self.peak else math.nan

    @property
    def T(self) -> float:
        return self.peak.T if self.peak else math.nan

    # -- domains --------------------------------------------------------
    def h_domain(self) -> tuple[float, float, bool, bool]:
        """(lo, hi, lo_closed, hi_closed)."""
        if self.mode == SUB_SMALL:
            return 0.0, self.A, False, True
        if self.mode == SUPER_LARGE:
            return self.A, math.inf, True, False
        return 0.0, math.inf, False, False

    k_domain = h_domain

    def _check_domain(self, tau):
        lo, hi, _, _ = self.h_domain()
        tau = np.asarray(tau, float)
        scale = max(1.0, abs(lo) if math.isfinite(lo) else 1.0, abs(hi) if math.isfinite(hi) else 1.0)
        slack = _DOMAIN_SLACK * scale
        if np.any(~(tau > 0)) or np.any(tau < lo - slack) or np.any(tau > hi + slack):
            raise DomainError(
                f"tau outside branch domain [{lo:g}, {hi:g}]", code="OUT_OF_DOMAIN", mode=self.mode
            )
        return np.clip(tau, lo if lo > 0 else tau, hi)

    # -- inverses -------------------------------------------------------
    def h_all(self, tau) -> np.ndarray:
        """h_i(tau) for every i; shape tau.shape + (n,)."""
        tau = self._check_domain(tau)
        tt = np.asarray(tau, float)[..., None]
        c = self.c
        k = self.kappa
        if self.mode == SUB_SMALL:
            inc, hi = True, self.Tprime
        elif self.mode == SUB_LARGE:
            inc = True
            with np.errstate(divide="ignore"):
                hi = np.minimum(np.exp(np.log(tt) / k), np.where(c > 0, tt / np.where(c > 0, c, 1.0), np.inf))
        elif self.mode == SUPER_SMALL:
            inc = False
            with np.errstate(divide="ignore", over="ignore"):
                hi = np.where(np.isfinite(self.S), self.S, 2.0 * np.exp(np.log(tt) / k))
        else:
            inc, hi = False, self.Tprime
        lo = _lower_bracket(k, c, tt, inc)
        lo, hi = np.broadcast_arrays(lo, hi)
        lo = np.minimum(lo, hi)
        out = _accel.invert_monotone(k, np.broadcast_to(c, lo.shape), np.broadcast_to(tt, lo.shape), lo, hi, inc)
        return out

    def k_all(self, tau) -> np.ndarray:
        """k_i(tau) for every i, NaN where the branch is absent."""
        tau = self._check_domain(tau)
        if self.mode not in (SUB_SMALL, SUPER_LARGE):
            return np.full(np.shape(tau) + (self.n,), np.nan)
        tt = np.asarray(tau, float)[..., None]
        c = self.c
        safe_c = np.where(self.hasK, c, 1.0)
        if self.mode == SUB_SMALL:
            lo = np.where(self.hasK, self.TdoublePrime, 1.0)
            hi = np.where(self.hasK, self.S, 2.0)
            inc = False
        else:
            lo = np.where(self.hasK, self.TdoublePrime, 1.0)
            hi = np.maximum(np.abs(tt / safe_c), lo) * (1.0 + 1e-12)
            inc = True
        lo, hi, tt = np.broadcast_arrays(lo, hi, tt)
        out = _accel.invert_monotone(self.kappa, np.broadcast_to(safe_c, lo.shape), tt, lo, hi, inc)
        return np.where(self.hasK, out, np.nan)

    def derivative_terms(self, t) -> np.ndarray:
        """1 / f_i'(t_i) = 1 / (kappa t_i^(kappa-1) + alpha - eta_i)."""
        t = np.asarray(t, float)
        return 1.0 / (self.kappa * _pow(t, self.kappa - 1.0) + self.c)

    def to_dict(self) -> dict:
        def fl(a):
            return [None if not np.isfinite(x) else float(x) for x in a]

        return {
            "mode": self.mode,
            "kappa": self.kappa,
            "alpha": self.alpha,
            "eta": self.eta.tolist(),
            "A": None if self.peak is None else self.peak.A,
            "T": None if self.peak is None else self.peak.T,
            "S": fl(self.S),
            "Tprime": fl(self.Tprime),
            "TdoublePrime": fl(self.TdoublePrime),
            "hasK": self.hasK.tolist(),
        }


def _mode(kappa: float, alpha: float, eta) -> str:
    if kappa > 0:
        return SUB_SMALL if alpha < eta[-1] else SUB_LARGE
    if kappa < 0:
        return SUPER_SMALL if alpha <= eta[0] else SUPER_LARGE
    raise RegimeError("branch machinery needs kappa != 0", code="WRONG_REGIME")


def buildTableFrom(eta, alpha: float, kappa: float, tol: Tolerances | None = None) -> BranchTable:
    """Branch table for canonical ``eta`` (ascending), common ``alpha`` and ``kappa``."""
    tol = tol or Tolerances()
    eta = np.asarray(eta, float)
    if np.any(np.diff(eta) < 0):
        raise DomainError("eta must be sorted ascending", code="NOT_CANONICAL")
    alpha = snap_alpha(float(alpha), eta, tol.exponent)
    kappa = float(kappa)
    if not kappa < 1:
        raise RegimeError("kappa must be below 1")
    mode = _mode(kappa, alpha, eta)
    n = len(eta)
    c = alpha - eta
    with np.errstate(divide="ignore"):
        S = np.where(c < 0, np.exp(-np.log(np.where(c < 0, -c, 1.0)) / (1.0 - kappa)), np.inf)
    Tp = np.full(n, np.nan)
    Tpp = np.full(n, np.nan)
    hasK = np.zeros(n, bool)
    peak = None
    if mode == SUB_SMALL:
        A, T = _peak_closed(kappa, eta[-1] - alpha)
        peak = Peak(A, T, n)
        hasK = c < 0
        pivot = eta == eta[-1]
        lo = _lower_bracket(kappa, c, A, True)
        Tp = _accel.invert_monotone(kappa, c, np.full(n, A), np.minimum(lo, T), np.full(n, T), True)
        Ti = np.where(hasK, np.exp(np.log(kappa / np.where(hasK, -c, 1.0)) / (1.0 - kappa)), 1.0)
        Tpp_raw = _accel.invert_monotone(
            kappa, np.where(hasK, c, -1.0), np.full(n, A), Ti, np.where(hasK, S, 2.0), False
        )
        Tpp = np.where(hasK, Tpp_raw, np.nan)
        Tp = np.where(pivot, T, Tp)
        Tpp = np.where(pivot, T, Tpp)
    elif mode == SUPER_LARGE:
        A, T = _peak_closed(kappa, alpha - eta[0])
        peak = Peak(A, T, 1)
        hasK = c > 0
        pivot = eta == eta[0]
        lo = _lower_bracket(kappa, c, A, False)
        Tp = _accel.invert_monotone(kappa, c, np.full(n, A), np.minimum(lo, T), np.full(n, T), False)
        safe = np.where(hasK, c, 1.0)
        Ti = np.where(hasK, np.exp(np.log(-kappa / safe) / (1.0 - kappa)), 1.0)
        hi = np.maximum(A / safe, Ti) * (1.0 + 1e-12)
        Tpp_raw = _accel.invert_monotone(kappa, safe, np.full(n, A), Ti, hi, True)
        Tpp = np.where(hasK, Tpp_raw, np.nan)
        Tp = np.where(pivot, T, Tp)
        Tpp = np.where(pivot, T, Tpp)
    return BranchTable(mode, kappa, alpha, eta, peak, S, Tp, Tpp, hasK, tol)


def common_alpha(params: SystemParams) -> float:
    a = params.alpha_constant
    if a is None:
        raise RegimeError("scalar reduction needs a common coupling alpha", code="WRONG_REGIME")
    return a


def buildTable(params: SystemParams, exps: DerivedExponents | None = None) -> BranchTable:
    exps = exps or derive(params)
    if exps.regime not in (Regime.SUBQUADRATIC, Regime.SUPERQUADRATIC):
        raise RegimeError(f"no scalar branches in regime {exps.regime.value}", code="WRONG_REGIME")
    return buildTableFrom(params.eta, common_alpha(params), exps.kappa, params.tol)


def peak(params: SystemParams, exps: DerivedExponents | None = None) -> Peak:
    """Interior extremum (A, T) of the pivot map, checked against f_pivot(T)."""
    exps = exps or derive(params)
    alpha = snap_alpha(common_alpha(params), params.eta, params.tol.exponent)
    kappa = exps.kappa
    eta = params.eta
    if exps.regime is Regime.SUBQUADRATIC:
        if not alpha < eta[-1]:
            raise DomainError("no interior maximum for alpha >= eta_n", code="WRONG_SIDE")
        A, T = _peak_closed(kappa, eta[-1] - alpha)
        pk, piv = Peak(A, T, params.n), params.n - 1
    elif exps.regime is Regime.SUPERQUADRATIC:
        if not alpha > eta[0]:
            raise DomainError("no interior minimum for alpha <= eta_1", code="WRONG_SIDE")
        A, T = _peak_closed(kappa, alpha - eta[0])
        pk, piv = Peak(A, T, 1), 0
    else:
        raise RegimeError("peak needs kappa != 0", code="WRONG_REGIME")
    fT = fScalar(T, piv, alpha, kappa, eta)
    h = T * 1e-4
    second = fScalar(T + h, piv, alpha, kappa, eta) + fScalar(T - h, piv, alpha, kappa, eta) - 2 * fT
    if abs(fT - A) > params.tol.root * max(1.0, abs(A)) or (second > 0) != (kappa < 0):
        raise DomainError("extremum cross-check failed", code="PEAK_MISMATCH", A=A, fT=fT)
    return pk


def sBound(i: int, params: SystemParams, exps: DerivedExponents | None = None) -> float:
    """Zero of f_i, or +inf when alpha >= eta_i."""
    exps = exps or derive(params)
    alpha = snap_alpha(common_alpha(params), params.eta, params.tol.exponent)
    gap = params.eta[i] - alpha
    if gap <= 0:
        return math.inf
    return gap ** (-1.0 / (1.0 - exps.kappa))


def branchPoints(i: int, pk: Peak | None, params: SystemParams, exps: DerivedExponents | None = None):
    """(T'_i, T''_i); raises BRANCH_ABSENT when only T'_i exists."""
    table = buildTable(params, exps)
    if table.peak is None:
        raise DomainError("no extremum in this configuration", code="WRONG_SIDE")
    if not table.hasK[i]:
        raise DomainError(
            f"second branch point absent for index {i + 1}", code="BRANCH_ABSENT", Tprime=float(table.Tprime[i])
        )
    return float(table.Tprime[i]), float(table.TdoublePrime[i])


def hInverse(i: int, tau: float, table: BranchTable, params=None, exps=None) -> float:
    return float(table.h_all(np.asarray(tau, float))[..., i])


def kInverse(i: int, tau: float, table: BranchTable, params=None, exps=None) -> float:
    if table.mode not in (SUB_SMALL, SUPER_LARGE) or not table.hasK[i]:
        raise DomainError(f"k-branch absent for index {i + 1}", code="BRANCH_ABSENT")
    return float(table.k_all(np.asarray(tau, float))[..., i])


def gPrime(tau_t: np.ndarray, table: BranchTable) -> float:
    """G'(tau) = alpha sum_i 1/f_i'(t_i) - 1 for a selected branch vector t."""
    return float(table.alpha * table.derivative_terms(tau_t).sum() - 1.0)
