"""Exact counting of synchronized solutions for a common coupling and exponent.

The engine reduces the n-dimensional system to one scalar equation per
subset of indices sitting on the second monotone branch, scans each equation
inside a window where roots can provably live, and converts every root back
to a coefficient vector polished against the full system.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import boxes
from .branches import (
    SUB_LARGE,
    SUB_SMALL,
    SUPER_LARGE,
    SUPER_SMALL,
    BranchTable,
    buildTable,
    common_alpha,
    snap_alpha,
)
from .errors import DomainError, NumericalError, RegimeError
from .params import DerivedExponents, Regime, SystemParams, close, derive

INFINITE = "INFINITE"
NONE = "NONE"

_U_MIN = 1e-8  # smallest sqrt-distance sampled next to the extremum


@dataclass
class Solution:
    assignment: tuple[int, ...]
    tau: float
    t: np.ndarray
    k: np.ndarray
    residual: float
    atPeak: bool = False

    def to_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "tau": self.tau,
            "t": self.t.tolist(),
            "k": self.k.tolist(),
            "residual": self.residual,
            "atPeak": self.atPeak,
        }


@dataclass
class CountReport:
    regime: str
    rhoStar: int
    rhoStarStar: int
    total: int | str
    solutions: list[Solution] = field(default_factory=list)
    certificates: list[dict] = field(default_factory=list)
    method: str = ""
    lowerBound: bool = False
    ambiguous: bool = False
    totalRange: tuple[int, int] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def count(self) -> float:
        """Numeric total: inf for INFINITE, 0 for NONE."""
        if self.total == INFINITE:
            return math.inf
        if self.total == NONE:
            return 0
        return int(self.total)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "method": self.method,
            "rhoStar": self.rhoStar,
            "rhoStarStar": self.rhoStarStar,
            "total": self.total,
            "lowerBound": self.lowerBound,
            "ambiguous": self.ambiguous,
            "totalRange": list(self.totalRange) if self.totalRange else None,
            "solutions": [s.to_dict() for s in self.solutions],
            "certificates": self.certificates,
            "notes": self.notes,
        }


# ----------------------------------------------------------------- helpers


def recoverK(t, exps: DerivedExponents) -> np.ndarray:
    """k_i = t_i^(1/q)."""
    t = np.asarray(t, float)
    if np.any(~(t > 0)):
        raise DomainError("t must be positive", code="NONPOSITIVE_T")
    return np.exp(np.log(t) / exps.qCommon)


def _mask(indices, n) -> np.ndarray:
    m = np.zeros(n, bool)
    m[list(indices)] = True
    return m


def _branch_values(table: BranchTable, tau, mask: np.ndarray) -> np.ndarray:
    H = table.h_all(tau)
    if not mask.any():
        return H
    K = table.k_all(tau)
    return np.where(mask, K, H)


def gSubset(tau, assignment, table: BranchTable, params=None, exps=None):
    """alpha (sum_{i not in S} h_i + sum_{i in S} k_i) - tau.

    ``assignment`` holds 0-based canonical indices on the second branch.
    """
    mask = _mask(assignment, table.n)
    if np.any(mask & ~table.hasK):
        raise DomainError("assignment uses an absent k-branch", code="OUT_OF_DOMAIN")
    tau_arr = np.asarray(tau, float)
    out = table.alpha * _branch_values(table, tau_arr, mask).sum(axis=-1) - tau_arr
    return float(out) if out.ndim == 0 else out


def _G(table: BranchTable, mask: np.ndarray) -> Callable:
    def G(tau):
        tau_arr = np.asarray(tau, float)
        out = table.alpha * _branch_values(table, tau_arr, mask).sum(axis=-1) - tau_arr
        return float(out) if out.ndim == 0 else out

    return G


def _brent(G, a, b) -> float:
    return optimize.brentq(G, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _scan_grid(a: float, b: float, per_decade: int, cluster: float | None) -> np.ndarray:
    """Geometric grid on [a, b] plus sqrt-spaced points next to ``cluster``."""
    decades = max(math.log10(b / a), 0.0)
    m = max(int(math.ceil(decades * per_decade)) + 1, 2 * per_decade)
    pts = [np.geomspace(a, b, m)]
    if cluster is not None:
        u = np.geomspace(_U_MIN, 1.0, 4 * per_decade)
        side = -1.0 if cluster >= b else 1.0
        near = cluster + side * cluster * u * u
        pts.append(near[(near > a) & (near < b)])
    g = np.unique(np.concatenate(pts))
    return g[(g >= a) & (g <= b)]


def _roots_in(G, a: float, b: float, per_decade: int, tol_root: float, cluster: float | None,
              open_at: float | None) -> tuple[list[float], list[list[float]]]:
    """All roots of G on [a, b] found by sign changes plus tangency probes.

    Roots equal to ``open_at`` (the extremal level) are dropped; they belong
    to the boundary count.
    """
    grid = _scan_grid(a, b, per_decade, cluster)
    vals = np.asarray(G(grid), float)
    roots, brackets = [], []

    def keep(r):
        if open_at is not None and abs(r - open_at) <= 4 * np.finfo(float).eps * open_at:
            return
        roots.append(float(r))

    for idx in range(len(grid) - 1):
        ga, gb = vals[idx], vals[idx + 1]
        if ga == 0.0:
            keep(grid[idx])
        elif ga * gb < 0:
            r = _brent(G, grid[idx], grid[idx + 1])
            keep(r)
            brackets.append([float(grid[idx]), float(grid[idx + 1])])
    if vals[-1] == 0.0:
        keep(grid[-1])

    # tangency probes at interior local minima of |G| without a sign change
    absv = np.abs(vals)
    for m in range(1, len(grid) - 1):
        if not (absv[m] < absv[m - 1] and absv[m] <= absv[m + 1]):
            continue
        s = np.sign(vals[m])
        if s == 0 or np.sign(vals[m - 1]) != s or np.sign(vals[m + 1]) != s:
            continue
        lo, hi = grid[m - 1], grid[m + 1]
        res = optimize.minimize_scalar(
            lambda x: s * G(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * hi}
        )
        xm, gm = float(res.x), s * float(res.fun)
        if np.sign(gm) == -s:
            for r in (_brent(G, lo, xm), _brent(G, xm, hi)):
                keep(r)
            brackets.append([float(lo), float(hi)])
        elif abs(gm) <= tol_root:
            keep(xm)
            brackets.append([float(lo), float(hi)])
    return sorted(roots), brackets


def _polish(k0: np.ndarray, sysm: boxes.MonomialSystem, tol_root: float) -> tuple[np.ndarray, float]:
    """A few Newton steps on the full system in log-coordinates."""
    x = np.log(k0)
    F = sysm.evaluate_log(x)
    best_x, best = x, float(np.max(np.abs(F)))
    for _ in range(8):
        if best <= 1e-3 * tol_root:
            break
        try:
            dx = np.linalg.solve(sysm.jacobian_log(x), -F)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dx)) or np.max(np.abs(dx)) > 1e-4:
            break
        x = x + dx
        F = sysm.evaluate_log(x)
        r = float(np.max(np.abs(F)))
        if r >= best:
            break
        best_x, best = x, r
    return np.exp(best_x), best


class _Assembler:
    """Collects roots as solutions, polishes and deduplicates them."""

    def __init__(self, params: SystemParams, exps: DerivedExponents, table: BranchTable | None):
        self.params = params
        self.exps = exps
        self.table = table
        self.sysm = boxes.f_system(params, canonical=True)
        self.sols: list[Solution] = []
        self.certs: list[dict] = []

    def _orig_assignment(self, canon_idx) -> tuple[int, ...]:
        return tuple(sorted(self.params.perm[i] + 1 for i in canon_idx))

    def add_t(self, t: np.ndarray, tau: float, assignment, at_peak: bool = False):
        tol = self.params.tol
        k, res = _polish(recoverK(t, self.exps), self.sysm, tol.root)
        if not res <= tol.root and np.min(k) < 1e3 * np.finfo(float).tiny ** (1.0 / self.exps.qCommon):
            raise NumericalError(
                "solution component below float64 range", code="UNDERFLOW", tau=tau, t=np.asarray(t).tolist()
            )
        if not res <= tol.root:
            raise NumericalError(
                f"solution residual {res:.3g} exceeds tol.root", code="RESIDUAL", tau=tau, residual=res
            )
        for s in self.sols:
            if np.max(np.abs(s.k - k) / np.maximum(np.abs(s.k), 1e-300)) <= tol.dedupe:
                s.atPeak = s.atPeak or at_peak
                return
        t_fin = np.exp(np.log(k) * self.exps.qCommon)
        self.sols.append(
            Solution(self._orig_assignment(assignment), float(tau), t_fin, k, res, at_peak)
        )

    def add_k(self, k: np.ndarray, assignment=(), tau=math.nan):
        tol = self.params.tol
        k, res = _polish(np.asarray(k, float), self.sysm, tol.root)
        if not res <= tol.root:
            raise NumericalError(f"solution residual {res:.3g} exceeds tol.root", code="RESIDUAL")
        self.sols.append(Solution(self._orig_assignment(assignment), tau, k ** self.exps.qCommon, k, res))

    def report(self, method: str, **kw) -> CountReport:
        p = self.params
        out = []
        for s in sorted(self.sols, key=lambda s: (s.tau, tuple(s.k))):
            out.append(Solution(s.assignment, s.tau, p.to_original(s.t), p.to_original(s.k), s.residual, s.atPeak))
        rs = sum(1 for s in out if s.atPeak)
        return CountReport(
            regime=self.exps.regime.value,
            rhoStar=rs,
            rhoStarStar=len(out) - rs,
            total=len(out),
            solutions=out,
            certificates=self.certs,
            method=method,
            **kw,
        )


# --------------------------------------------------------------- operations


def _single_equation(params, exps, table: BranchTable, increasing: bool, method: str) -> CountReport:
    """Unique root of alpha sum h_i - tau on (0, inf)."""
    mask = np.zeros(table.n, bool)
    G = _G(table, mask)
    lo = hi = 1.0
    glo = ghi = G(1.0)
    want_lo = -1.0 if increasing else 1.0
    for _ in range(4000):
        if np.sign(glo) == want_lo:
            break
        lo *= 0.5
        glo = G(lo)
    for _ in range(4000):
        if np.sign(ghi) == -want_lo:
            break
        hi *= 2.0
        ghi = G(hi)
    if not (np.sign(glo) == want_lo and np.sign(ghi) == -want_lo):
        raise NumericalError("could not bracket the single equation", code="NO_CONVERGENCE")
    root = _brent(G, lo, hi)
    asm = _Assembler(params, exps, table)
    t = table.h_all(root)
    asm.certs.append({"assignment": [], "bracket": [lo, hi], "tau": root})
    if increasing:
        gp = float(table.alpha * table.derivative_terms(t).sum() - 1.0)
        asm.certs[-1]["Gprime"] = gp
        if not gp > 0:
            raise NumericalError("monotonicity check failed at the root", code="NO_CONVERGENCE", Gprime=gp)
    asm.add_t(t, root, ())
    return asm.report(method)


def countAlphaLarge(params: SystemParams, exps: DerivedExponents | None = None) -> CountReport:
    exps = exps or derive(params)
    if exps.regime is not Regime.SUBQUADRATIC:
        raise RegimeError("needs p < 2", code="WRONG_REGIME")
    table = buildTable(params, exps)
    if table.mode != SUB_LARGE:
        raise RegimeError("needs alpha >= eta_n", code="WRONG_REGIME")
    return _single_equation(params, exps, table, True, "single-equation")


def _countSuperSmall(params, exps, table) -> CountReport:
    return _single_equation(params, exps, table, False, "single-equation")


def countSubsets(params: SystemParams, exps: DerivedExponents | None = None) -> CountReport:
    """Count via subset equations on the open branch domain plus the boundary level."""
    exps = exps or derive(params)
    table = buildTable(params, exps)
    # without an interior extremum only the all-h equation exists
    if table.mode == SUB_LARGE:
        return _single_equation(params, exps, table, True, "single-equation")
    if table.mode == SUPER_SMALL:
        return _countSuperSmall(params, exps, table)
    tol = params.tol
    n, A, alpha = table.n, table.A, table.alpha
    pool = [i for i in range(n) if table.hasK[i]]
    pivot_eta = table.eta[-1] if table.mode == SUB_SMALL else table.eta[0]
    jpool = [i for i in pool if table.eta[i] != pivot_eta]
    asm = _Assembler(params, exps, table)
    per_decade = max(tol.gridMin, 32)

    # boundary level tau = A
    n_amb = 0
    for size in range(len(jpool) + 1):
        for J in itertools.combinations(jpool, size):
            m = _mask(J, n)
            t = np.where(m, table.TdoublePrime, table.Tprime)
            gA = alpha * t.sum() - A
            entry = {"assignment": list(asm._orig_assignment(J)), "G_at_A": gA, "level": "boundary"}
            asm.certs.append(entry)
            if abs(gA) <= tol.boundary * max(1.0, A):
                if abs(gA) > tol.root * max(1.0, A):
                    n_amb += 1
                    entry["ambiguous"] = True
                asm.add_t(t, A, J, at_peak=True)

    # open domain
    sub = table.mode == SUB_SMALL
    for size in range(len(pool) + 1):
        for I in itertools.combinations(pool, size):
            m = _mask(I, n)
            G = _G(table, m)
            gA = G(A)
            entry = {"assignment": list(asm._orig_assignment(I)), "G_at_A": gA}
            if not I:
                # single upward (sub) or downward (super) crossing at most
                roots = []
                if gA > 0:
                    if sub:
                        lo = A
                        while G(lo) >= 0:
                            lo *= 0.1
                        roots = [_brent(G, lo, A)]
                        entry["bracket"] = [lo, A]
                    else:
                        hi = 2.0 * A
                        while G(hi) >= 0:
                            hi *= 2.0
                        roots = [_brent(G, A, hi)]
                        entry["bracket"] = [A, hi]
            else:
                if sub:
                    a = alpha * table.TdoublePrime[list(I)].sum()
                    rest = [i for i in range(n) if i not in I]
                    b = min(A, alpha * table.Tprime[rest].sum() + alpha * table.S[list(I)].sum())
                    cluster = A if b >= A else None
                    b = min(b, A)
                else:
                    ci = table.c[list(I)]
                    w = alpha / ci
                    num = (w * np.exp(table.kappa * np.log(table.TdoublePrime[list(I)]))).sum()
                    a, b = A, num / (w.sum() - 1.0)
                    cluster = A
                entry["window"] = [a, b]
                roots = []
                if b > a * (1 + 1e-15):
                    roots, br = _roots_in(G, a, b, per_decade, tol.root, cluster, A)
                    entry["brackets"] = br
            entry["roots"] = roots
            asm.certs.append(entry)
            for r in roots:
                if sub and not r < A:
                    continue
                if not sub and not r > A:
                    continue
                asm.add_t(_branch_values(table, r, m), r, I)

    rep = asm.report("subset-scan")
    if n_amb:
        rep.ambiguous = True
        rep.totalRange = (max(rep.total - n_amb, 0), rep.total + n_amb)
        rep.notes.append("BOUNDARY_AMBIGUOUS")
    return rep


def closedFormP2(params: SystemParams, exps: DerivedExponents | None = None) -> CountReport:
    exps = exps or derive(params)
    if exps.regime is not Regime.QUADRATIC:
        raise RegimeError("closed form needs p = 2", code="WRONG_REGIME")
    eta = params.eta
    alpha = snap_alpha(common_alpha(params), eta, params.tol.exponent)
    beta = exps.beta
    asm = _Assembler(params, exps, None)
    reg = exps.regime.value
    if alpha > eta[-1] or alpha < eta[0]:
        d = alpha - eta
        k = np.exp(-beta * np.log(d * ((alpha / d).sum() - 1.0)))
        asm.add_k(k)
        return asm.report("closed-form")
    if alpha == eta[0] == eta[-1]:
        k = np.full(params.n, (params.n * alpha) ** (-beta))
        asm.add_k(k)
        rep = asm.report("closed-form")
        rep.total = INFINITE
        rep.rhoStar, rep.rhoStarStar = 0, 0
        rep.notes.append("solution set is the surface alpha * sum_j k_j^(2*-2) = 1; one representative listed")
        return rep
    return CountReport(reg, 0, 0, NONE, method="closed-form", notes=["eta_1 <= alpha <= eta_n with eta_1 != eta_n"])


def existenceReport(params: SystemParams, exps: DerivedExponents | None = None, gridPerFace: int = 64) -> CountReport:
    """Lower bound from certified degree boxes when no exact count applies."""
    exps = exps or derive(params)
    off = params.offdiag
    pv = params.p[off]
    asm = _Assembler(params, exps, None)
    sysm = boxes.f_system(params)
    notes = []
    cand: list[boxes.Box] = []
    system = None
    if np.all(pv < 2.0):
        try:
            cand = boxes.smallAlphaBoxes(params)
        except DomainError as e:
            notes.append(f"small-coupling boxes unavailable: {e.code}")
        if not cand and params.p_constant is not None:
            from .conditions import inversePositivity

            inv = inversePositivity(params.coupling_matrix)
            if inv.offDiagPositive and inv.rowSumsPositive:
                d = params.to_dict()
                B = np.array(d["alpha"])
                np.fill_diagonal(B, d["eta"])
                ainv = np.linalg.inv(B)
                cand = [boxes.gBox(ainv, exps.beta)]
                system = boxes.g_system(ainv, params.p_constant, exps.twoStar - params.p_constant)
    elif np.all(pv > 2.0):
        cand = [boxes.superquadraticBox(params)]
    else:
        notes.append("no box construction covers this exponent configuration")
    found = 0
    for b in cand:
        cert = boxes.mirandaCertify(b, params, gridPerFace, system=system or sysm)
        entry = cert.to_dict()
        asm.certs.append(entry)
        if not cert.conclusive:
            continue
        k = boxes.solveInBox(b, params, system=system or sysm, gridPerFace=gridPerFace, certificate=cert)
        res = float(np.max(np.abs(sysm.evaluate(k))))
        found += 1
        asm.sols.append(Solution((), math.nan, k ** (exps.qCommon or 1.0), k, res))
    rep = CountReport(
        regime=exps.regime.value, rhoStar=0, rhoStarStar=found, total=found,
        solutions=asm.sols, certificates=asm.certs, method="degree-boxes", lowerBound=True, notes=notes,
    )
    return rep


def countSynchronized(params: SystemParams) -> CountReport:
    exps = derive(params)
    alpha = params.alpha_constant
    if exps.regime is Regime.MIXED or alpha is None:
        return existenceReport(params, exps)
    if exps.regime is Regime.QUADRATIC:
        return closedFormP2(params, exps)
    table = buildTable(params, exps)
    if table.mode == SUB_LARGE:
        return _single_equation(params, exps, table, True, "single-equation")
    if table.mode == SUPER_SMALL:
        return _countSuperSmall(params, exps, table)
    return countSubsets(params, exps)
