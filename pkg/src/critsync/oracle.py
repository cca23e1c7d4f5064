"""Brute-force counters used as an independent check on the counting engine.

Nothing here consults branch tables or monotonicity arguments.  The scalar
scan finds every root of t^kappa + c t = tau numerically on a log grid, and
the grid scan works on the coefficient system directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _accel
from .counting import CountReport, Solution
from .errors import CritSyncError, DomainError, NumericalError, RegimeError, ValidationError
from .params import DerivedExponents, Regime, SystemParams, derive

_LOG_T = 690.0
_T_GRID = 6001
_BISECT = 80


@dataclass(frozen=True)
class ScanConfig:
    pointsPerDecade: int = 32
    refinementDepth: int = 1
    tauFloor: float = 1e-40
    tauCeil: float | None = None  # None: 2 alpha sum_j eta_j^(-q beta), above any solution
    gridPerAxis: int | None = None

    def __post_init__(self):
        if self.pointsPerDecade < 32:
            raise ValidationError("pointsPerDecade must be at least 32", code="INVALID")
        if not 0 < self.tauFloor < (self.tauCeil if self.tauCeil is not None else math.inf):
            raise ValidationError("need 0 < tauFloor < tauCeil", code="INVALID")
        if self.refinementDepth < 1:
            raise ValidationError("refinementDepth must be at least 1", code="INVALID")


# ---------------------------------------------------------------- residual


def _matrices(params: SystemParams):
    d = params.to_dict()
    return (np.asarray(d["eta"], float), np.asarray(d["alpha"], float), np.asarray(d["p"], float),
            np.asarray(d["q"], float))


def _f_and_jac_log(x, eta, A, P, Q, a):
    """f and df/dlog k in the caller's order."""
    n = len(x)
    off = ~np.eye(n, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        cross = np.where(off, A * np.exp((P - 2.0) * x[:, None] + Q * x[None, :]), 0.0)
        selfv = eta * np.exp(a * x)
        f = selfv + cross.sum(axis=1) - 1.0
        J = cross * Q
        J[np.diag_indices(n)] = a * selfv + (cross * (P - 2.0)).sum(axis=1)
    return f, J


def residual(k, params: SystemParams) -> float:
    """max_i |f_i(k)| for k in the caller's index order."""
    k = np.asarray(k, float)
    if k.shape != (params.n,) or np.any(~(k > 0)):
        raise DomainError("k must be a positive vector of length n", code="NONPOSITIVE_K")
    eta, A, P, Q = _matrices(params)
    f, _ = _f_and_jac_log(np.log(k), eta, A, P, Q, derive(params).twoStar - 2.0)
    return float(np.max(np.abs(f)))


def _f_and_jac_batch(X, eta, A, P, Q, a):
    """Row-wise f and df/dlog k for starts X of shape (m, n)."""
    n = X.shape[1]
    off = ~np.eye(n, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        cross = np.where(off, A * np.exp((P - 2.0) * X[:, :, None] + Q * X[:, None, :]), 0.0)
        selfv = eta * np.exp(a * X)
        F = selfv + cross.sum(axis=2) - 1.0
        J = cross * Q
        idx = np.arange(n)
        J[:, idx, idx] = a * selfv + (cross * (P - 2.0)).sum(axis=2)
    return F, J


def _solve_rows(J, rhs):
    try:
        return np.linalg.solve(J, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full_like(rhs, np.nan)
        for r in range(len(rhs)):
            try:
                out[r] = np.linalg.solve(J[r], rhs[r])
            except np.linalg.LinAlgError:
                pass
        return out


def _newton_batch(X0, params: SystemParams, iters: int = 60):
    """Damped Newton in log-coordinates from every row of X0 at once.

    Returns the best k per row and its max-norm residual.
    """
    eta, A, P, Q = _matrices(params)
    a = derive(params).twoStar - 2.0
    X = np.array(X0, float, ndmin=2)
    F, J = _f_and_jac_batch(X, eta, A, P, Q, a)
    r = np.max(np.abs(F), axis=1)
    r = np.where(np.isfinite(r), r, np.inf)
    best_r, best_x = r.copy(), X.copy()
    active = np.isfinite(r)
    for _ in range(iters):
        if not active.any():
            break
        rows = np.flatnonzero(active)
        dx = _solve_rows(J[rows], -F[rows])
        good = np.all(np.isfinite(dx), axis=1)
        active[rows[~good]] = False
        rows, dx = rows[good], dx[good]
        step = np.ones(len(rows))
        done = np.zeros(len(rows), bool)
        for _ in range(30):
            todo = ~done
            if not todo.any():
                break
            cand = X[rows[todo]] + step[todo, None] * dx[todo]
            Fc, Jc = _f_and_jac_batch(cand, eta, A, P, Q, a)
            rc = np.max(np.abs(Fc), axis=1)
            ok = np.isfinite(rc) & (rc < r[rows[todo]] * (1 - 1e-4 * step[todo]))
            hit = rows[todo][ok]
            X[hit], F[hit], J[hit], r[hit] = cand[ok], Fc[ok], Jc[ok], rc[ok]
            sub = np.flatnonzero(todo)
            done[sub[ok]] = True
            step[sub[~ok]] *= 0.5
        active[rows[~done]] = False
        better = r < best_r
        best_r[better], best_x[better] = r[better], X[better]
        active &= best_r > 1e-15
    return np.exp(best_x), best_r


def _newton(x0, params: SystemParams, iters: int = 60):
    K, R = _newton_batch(np.atleast_2d(x0), params, iters)
    return K[0], float(R[0])


# ------------------------------------------------------------ scalar scan


def _drop_edges(R: np.ndarray) -> np.ndarray:
    # a root pinned to the ends of the log-t window means the root pattern
    # for that index is not resolved, so the whole row is discarded
    edge = np.any(np.abs(R) > _LOG_T - 1.0, axis=-1, keepdims=True)
    return np.where(edge, np.nan, R)


class _RootFinder:
    """All roots of phi_i(t) = t^kappa + c_i t - tau, located numerically."""

    def __init__(self, kappa: float, c: np.ndarray):
        self.kappa = kappa
        self.c = np.asarray(c, float)
        grid = np.linspace(-_LOG_T, _LOG_T, _T_GRID)
        self.segments = []  # per index: list of (lo, hi) in log t
        self.levels = []  # extremal values of phi_i
        for ci in self.c:
            vals = self._phi(grid, ci)
            with np.errstate(invalid="ignore"):
                d = np.sign(np.diff(vals))
            turns = np.nonzero(d[1:] * d[:-1] < 0)[0] + 1
            cuts = [grid[0]]
            for m in turns:
                s = d[m - 1]  # +1 before a maximum
                res = optimize.minimize_scalar(
                    lambda y: -s * self._phi(y, ci), bounds=(grid[m - 1], grid[m + 1]), method="bounded",
                    options={"xatol": 1e-13},
                )
                cuts.append(float(res.x))
                self.levels.append(float(self._phi(res.x, ci)))
            cuts.append(grid[-1])
            self.segments.append(list(zip(cuts[:-1], cuts[1:])))
        self.width = max(len(s) for s in self.segments)

    def _phi(self, y, ci):
        with np.errstate(over="ignore"):
            return np.exp(self.kappa * y) + ci * np.exp(y)

    def roots(self, tau) -> np.ndarray:
        """Array (m, n, width) of log-roots sorted ascending, NaN-padded."""
        tau = np.atleast_1d(np.asarray(tau, float))
        m, n = len(tau), len(self.c)
        out = np.full((m, n, self.width), np.nan)
        for i, ci in enumerate(self.c):
            for s, (a, b) in enumerate(self.segments[i]):
                fa = self._phi(a, ci) - tau
                fb = self._phi(b, ci) - tau
                ok = np.sign(fa) * np.sign(fb) <= 0
                if not ok.any():
                    continue
                lo = np.full(m, a)
                hi = np.full(m, b)
                up = fa < fb
                for _ in range(_BISECT):
                    mid = 0.5 * (lo + hi)
                    below = (self._phi(mid, ci) - tau) < 0
                    move_lo = below == up
                    lo = np.where(move_lo, mid, lo)
                    hi = np.where(move_lo, hi, mid)
                out[ok, i, s] = 0.5 * (lo + hi)[ok]
        return np.sort(_drop_edges(out), axis=-1)

    def roots_scalar(self, tau: float) -> np.ndarray:
        """Same as ``roots`` for one tau, via scalar Brent solves; shape (n, width)."""
        k = self.kappa
        out = np.full((len(self.c), self.width), np.nan)
        for i, ci in enumerate(self.c):
            ci = float(ci)

            def g(y):
                try:
                    return math.exp(k * y) + ci * math.exp(y) - tau
                except OverflowError:
                    return math.inf if (k < 0 and y < 0) or (ci > 0 and y > 0) else -math.inf

            for s, (a, b) in enumerate(self.segments[i]):
                ga, gb = g(a), g(b)
                if ga == 0.0:
                    out[i, s] = a
                elif gb == 0.0:
                    out[i, s] = b
                elif (ga < 0) != (gb < 0):
                    out[i, s] = optimize.brentq(g, a, b, xtol=1e-15, rtol=1e-15, maxiter=300)
        return np.sort(_drop_edges(out), axis=-1)


def _pick(R: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """First root where mask is False, second root where True."""
    first = R[..., 0]
    second = R[..., 1] if R.shape[-1] > 1 else np.full(first.shape, np.nan)
    return np.where(mask, second, first)


def _tau_grid(lo: float, hi: float, per_decade: int, levels) -> np.ndarray:
    pts = [np.geomspace(lo, hi, int(math.ceil(math.log10(hi / lo) * per_decade)) + 1)]
    u = np.geomspace(1e-8, 0.5, 2 * per_decade)
    for v in levels:
        if lo < v < hi:
            pts.append(np.r_[v, v * (1 - u * u), v * (1 + u * u)])
    g = np.unique(np.concatenate(pts))
    return g[(g >= lo) & (g <= hi)]


def _scan_once(params, exps, cfg: ScanConfig, per_decade: int):
    alpha = params.alpha_constant
    eta = np.asarray(params.to_dict()["eta"], float)  # caller's order
    n = params.n
    rf = _RootFinder(exps.kappa, alpha - eta)
    # eta_i k_i^(2*-2) < 1 at a solution, so t_i < eta_i^(-q beta) and tau = alpha sum t_j is bounded
    ceil = cfg.tauCeil or 2.0 * alpha * float(np.sum(eta ** (-exps.qCommon * exps.beta)))
    floor = min(cfg.tauFloor, 0.5 * ceil)
    taus = _tau_grid(floor, ceil, per_decade, rf.levels)
    R = rf.roots(taus)
    tol = params.tol
    found = []  # (tau, mask, logt, at_level)
    for bits in itertools.product([False, True], repeat=n):
        mask = np.array(bits)
        if mask.any() and rf.width < 2:
            continue
        logt = _pick(R, mask)
        G = alpha * np.exp(logt).sum(axis=1) - taus
        valid = np.isfinite(G)

        def Gs(x, mask=mask):
            lt = _pick(rf.roots_scalar(x), mask)
            return float(alpha * np.exp(lt).sum() - x)

        for j in range(len(taus) - 1):
            if not (valid[j] and valid[j + 1]):
                continue
            if G[j] == 0.0:
                found.append((taus[j], mask, None))
            elif G[j] * G[j + 1] < 0:
                # a bracket straddling a change in root count is split at the level
                try:
                    r = optimize.brentq(Gs, taus[j], taus[j + 1], xtol=1e-300, rtol=1e-15, maxiter=200)
                except ValueError:
                    continue
                found.append((r, mask, None))
        for v in rf.levels:
            if floor < v < ceil:
                gv = Gs(v)
                if math.isfinite(gv) and abs(gv) <= tol.boundary * max(1.0, v):
                    found.append((v, mask, "level"))
    return found, rf


def _assemble(params, exps, found, rf, method) -> CountReport:
    tol = params.tol
    sols: list[Solution] = []
    for tau, mask, tag in found:
        lt = _pick(rf.roots_scalar(tau), mask)
        if not np.all(np.isfinite(lt)):
            continue
        k0 = np.exp(lt / exps.qCommon)
        if np.any(~(k0 > 0)):
            continue
        k, res = _newton(np.log(k0), params, iters=8)
        if np.max(np.abs(k - k0) / k0) > 1e-6:
            k, res = k0, residual(k0, params)
        if not res <= tol.root:
            raise NumericalError("oracle root failed the residual check", code="RESIDUAL", residual=res, tau=tau)
        dup = None
        for s in sols:
            if np.max(np.abs(s.k - k) / s.k) <= tol.dedupe:
                dup = s
                break
        if dup is not None:
            dup.atPeak = dup.atPeak or tag == "level"
            continue
        sols.append(Solution(tuple(int(i) + 1 for i in np.nonzero(mask)[0]), float(tau), k**exps.qCommon, k, res,
                             tag == "level"))
    sols.sort(key=lambda s: (s.tau, tuple(s.k)))
    rs = sum(1 for s in sols if s.atPeak)
    return CountReport(exps.regime.value, rs, len(sols) - rs, len(sols), sols, method=method)


def scalarScanCount(params: SystemParams, exps: DerivedExponents | None = None,
                    cfg: ScanConfig | None = None) -> CountReport:
    """Count roots of every subset equation by dense sign-change scanning.

    The scan is repeated with the density doubled ``refinementDepth`` times;
    any disagreement raises GRID_UNSTABLE.
    """
    exps = exps or derive(params)
    cfg = cfg or ScanConfig()
    if params.alpha_constant is None or params.p_constant is None:
        raise RegimeError("scalar scan needs common alpha and p", code="WRONG_REGIME")
    if exps.regime not in (Regime.SUBQUADRATIC, Regime.SUPERQUADRATIC):
        raise RegimeError(f"scalar scan not defined for regime {exps.regime.value}", code="WRONG_REGIME")
    reports = []
    for level in range(cfg.refinementDepth + 1):
        found, rf = _scan_once(params, exps, cfg, cfg.pointsPerDecade * 2**level)
        reports.append(_assemble(params, exps, found, rf, "scalar-scan"))
    totals = [r.total for r in reports]
    if len(set(totals)) != 1:
        raise NumericalError("scan densities disagree", code="GRID_UNSTABLE", totals=totals)
    out = reports[-1]
    out.certificates = [{"pointsPerDecade": cfg.pointsPerDecade * 2**i, "total": t} for i, t in enumerate(totals)]
    return out


# -------------------------------------------------------------- grid scan


def gridScanCount(params: SystemParams, cfg: ScanConfig | None = None, trigger: float = 0.05,
                  maxStarts: int = 4000) -> CountReport:
    """Solutions of the full system located from a log grid of (0, k_max]^n."""
    cfg = cfg or ScanConfig()
    n = params.n
    if n > 3:
        raise DomainError("grid scan limited to n <= 3", code="COST_GUARD", n=n)
    exps = derive(params)
    eta, A, P, Q = _matrices(params)
    beta = exps.beta
    kmax = 2.0 * float(np.max(eta ** (-beta)))
    g = cfg.gridPerAxis or {1: 2000, 2: 400, 3: 80}[n]
    axis = np.linspace(math.log(kmax) - 40.0, math.log(kmax), g)
    off = ~np.eye(n, dtype=bool)
    C = np.where(off, A, 0.0)
    EI = np.where(off, P - 2.0, 0.0)
    EJ = np.where(off, Q, 0.0)
    a = exps.twoStar - 2.0
    vals = _accel.grid_vertex_values([axis] * n, eta, np.full(n, a), C, EI, EJ, np.full(n, -1.0))
    cells = _accel.flag_cells(vals, trigger)
    h = axis[1] - axis[0]
    if len(cells) > maxStarts:
        # keep the cells with the smallest centre residual
        centres = axis[cells] + 0.5 * h
        score = np.max(np.abs(_f_and_jac_batch(centres, eta, A, P, Q, a)[0]), axis=1)
        cells = cells[np.argsort(score)[:maxStarts]]
    tol = params.tol
    sols: list[Solution] = []
    K, R = _newton_batch(axis[cells] + 0.5 * h, params) if len(cells) else (np.empty((0, n)), np.empty(0))
    for k, res in zip(K, R):
        if not res <= tol.root or np.any(k > kmax):
            continue
        if any(np.max(np.abs(s.k - k) / s.k) <= tol.dedupe for s in sols):
            continue
        qk = exps.qCommon if exps.qCommon is not None else 1.0
        sols.append(Solution((), math.nan, k**qk, k, res))
    sols.sort(key=lambda s: tuple(s.k))
    return CountReport(exps.regime.value, 0, len(sols), len(sols), sols, method="grid-scan",
                       certificates=[{"gridPerAxis": g, "flaggedCells": int(len(cells))}])


__all__ = ["ScanConfig", "residual", "scalarScanCount", "gridScanCount", "CritSyncError"]
