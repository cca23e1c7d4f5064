"""Coupled algebraic system, degree boxes and sampled sign certificates.

All public functions here work in the caller's index order: vectors, boxes
and matrices passed in or returned are never canonicalized.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _accel
from .errors import DomainError, NumericalError, RegimeError, ValidationError
from .params import Regime, SystemParams, derive

__all__ = [
    "MonomialSystem",
    "Box",
    "Verdict",
    "SignCertificate",
    "f_system",
    "g_system",
    "evalF",
    "evalG",
    "jacobianF",
    "alphaStar",
    "alphaStarStar",
    "smallAlphaBoxes",
    "defaultEpsilon",
    "superquadraticBox",
    "gBoxBounds",
    "gBox",
    "mirandaCertify",
    "solveInBox",
]


@dataclass(frozen=True, eq=False)
class MonomialSystem:
    """F_i(k) = a_i k_i^{e_i} + sum_j C_ij k_i^{EI_ij} k_j^{EJ_ij} + c_i."""

    self_coef: np.ndarray
    self_exp: np.ndarray
    C: np.ndarray
    EI: np.ndarray
    EJ: np.ndarray
    const: np.ndarray

    @property
    def n(self) -> int:
        return len(self.self_coef)

    def _args(self):
        return self.self_coef, self.self_exp, self.C, self.EI, self.EJ, self.const

    def evaluate(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        _check_positive(k, "NONPOSITIVE_K")
        out = _accel.monomial_eval(np.log(np.atleast_2d(k)), *self._args())
        return out[0] if k.ndim == 1 else out

    def evaluate_log(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = _accel.monomial_eval(np.atleast_2d(x), *self._args())
        return out[0] if x.ndim == 1 else out

    def jacobian_log(self, x) -> np.ndarray:
        """dF_i / d(log k_m) at log-coordinates ``x``."""
        x = np.asarray(x, dtype=float)
        T = self.C * np.exp(self.EI * x[:, None] + self.EJ * x[None, :])
        J = T * self.EJ
        J[np.diag_indices(self.n)] += (T * self.EI).sum(axis=1) + self.self_coef * self.self_exp * np.exp(self.self_exp * x)
        return J

    def face_range(self, i: int, value: float, grids: list[np.ndarray]) -> tuple[float, float]:
        """Exact min/max of F_i over the tensor grid with k_i fixed to ``value``.

        F_i is a sum of univariate terms once k_i is fixed, so the extremes
        over the product grid are sums of per-axis extremes.
        """
        xi = math.log(value)
        base = self.self_coef[i] * math.exp(self.self_exp[i] * xi) + self.const[i]
        base += self.C[i, i] * math.exp((self.EI[i, i] + self.EJ[i, i]) * xi)
        lo = hi = base
        for j, g in enumerate(grids):
            if j == i or self.C[i, j] == 0.0:
                continue
            vals = self.C[i, j] * np.exp(self.EI[i, j] * xi + self.EJ[i, j] * np.log(g))
            lo += float(vals.min())
            hi += float(vals.max())
        return lo, hi


def _check_positive(k, code):
    if np.any(~(np.asarray(k) > 0)):
        raise DomainError("arguments must be strictly positive", code=code)


def _original_matrices(params: SystemParams):
    d = params.to_dict()
    return (np.asarray(d["eta"]), np.asarray(d["alpha"]), np.asarray(d["p"]), np.asarray(d["q"]))


def f_system(params: SystemParams, canonical: bool = False) -> MonomialSystem:
    if canonical:
        eta, alpha, p, q = params.eta, params.alpha, params.p, params.q
    else:
        eta, alpha, p, q = _original_matrices(params)
    n = params.n
    exps = derive(params)
    off = ~np.eye(n, dtype=bool)
    return MonomialSystem(
        self_coef=np.array(eta, dtype=float),
        self_exp=np.full(n, exps.twoStar - 2.0),
        C=np.where(off, alpha, 0.0),
        EI=np.where(off, p - 2.0, 0.0),
        EJ=np.where(off, q, 0.0),
        const=np.full(n, -1.0),
    )


def g_system(inverseMatrix, p: float, q: float) -> MonomialSystem:
    a = np.asarray(inverseMatrix, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValidationError("inverse matrix must be square", code="DIMENSION_MISMATCH")
    return MonomialSystem(
        self_coef=np.ones(n),
        self_exp=np.full(n, float(q)),
        C=-a,
        EI=np.zeros((n, n)),
        EJ=np.full((n, n), 2.0 - float(p)),
        const=np.zeros(n),
    )


def evalF(k, params: SystemParams) -> np.ndarray:
    """Residual vector f(k) of the coupled system."""
    return f_system(params).evaluate(k)


def jacobianF(k, params: SystemParams) -> np.ndarray:
    """df_i/dk_m."""
    k = np.asarray(k, dtype=float)
    _check_positive(k, "NONPOSITIVE_K")
    return f_system(params).jacobian_log(np.log(k)) / k[None, :]


def evalG(k, inverseMatrix, p: float, q: float) -> np.ndarray:
    """g_i(k) = k_i^q - sum_j a_ij k_j^(2-p)."""
    return g_system(inverseMatrix, p, q).evaluate(k)


# ---------------------------------------------------------------- thresholds


def _require_subquadratic(params: SystemParams):
    exps = derive(params)
    off = params.offdiag
    if exps.regime is Regime.SUBQUADRATIC:
        return exps
    if exps.regime is Regime.MIXED and np.all(params.p[off] < 2.0):
        return exps
    raise RegimeError("threshold defined only for p_ij < 2", regime=exps.regime.value)


def _threshold_sums(params: SystemParams, gamma: float, beta: float) -> np.ndarray:
    eta = params.eta
    off = params.offdiag
    terms = np.exp(
        beta * params.q * np.log(1.0 / eta)[None, :] + beta * (params.p - 2.0) * np.log(gamma / eta)[:, None]
    )
    return np.where(off, terms, 0.0).sum(axis=1)


def alphaStar(params: SystemParams) -> float:
    exps = _require_subquadratic(params)
    return 0.5 / float(_threshold_sums(params, 0.5, exps.beta).max())


def _gamma_objective(params: SystemParams, beta: float):
    def f(g):
        return (1.0 - g) / float(_threshold_sums(params, g, beta).max())

    return f


def alphaStarStar(params: SystemParams, return_gamma: bool = False):
    """max over gamma in (0,1) of the improved threshold function."""
    exps = _require_subquadratic(params)
    f = _gamma_objective(params, exps.beta)
    grid = np.unique(np.concatenate([np.linspace(0.0, 1.0, 2001)[1:-1], [0.5]]))
    vals = np.array([f(g) for g in grid])
    b = int(np.argmax(vals))
    best_g, best = float(grid[b]), float(vals[b])
    if 0 < b < len(grid) - 1:
        res = optimize.minimize_scalar(
            lambda g: -f(g), bracket=(grid[b - 1], grid[b], grid[b + 1]), method="golden",
            tol=max(params.tol.root, 1e-12),
        )
        if 0 < res.x < 1 and -res.fun > best:
            best_g, best = float(res.x), float(-res.fun)
    return (best, best_g) if return_gamma else best


# ---------------------------------------------------------------------- boxes


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray
    label: str = ""

    def __post_init__(self):
        lo = np.asarray(self.lower, float)
        hi = np.asarray(self.upper, float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValidationError("box bounds must be vectors of equal length", code="DIMENSION_MISMATCH")
        if np.any(~(lo > 0)) or np.any(~(hi > lo)):
            raise ValidationError("need 0 < lower < upper", code="BAD_BOX")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, k, strict: bool = True) -> bool:
        k = np.asarray(k, float)
        if strict:
            return bool(np.all(k > self.lower) and np.all(k < self.upper))
        return bool(np.all(k >= self.lower) and np.all(k <= self.upper))

    def children(self) -> list["Box"]:
        mid = self.center
        out = []
        for bits in itertools.product((0, 1), repeat=self.n):
            b = np.array(bits, bool)
            out.append(Box(np.where(b, mid, self.lower), np.where(b, self.upper, mid), self.label))
        return out

    def disjoint(self, other: "Box") -> bool:
        return bool(np.any(self.upper <= other.lower) or np.any(other.upper <= self.lower))

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist(), "label": self.label}


def _box_edges(params: SystemParams):
    eta = np.asarray(params.to_dict()["eta"])
    beta = derive(params).beta
    return (1.0 / (2.0 * eta)) ** beta, (1.0 / eta) ** beta


def _eps_term(params: SystemParams):
    """alpha_ij (1/(2 eta_j))^(beta q_ij) per ordered pair, original order."""
    eta, alpha, p, q = _original_matrices(params)
    beta = derive(params).beta
    return alpha * np.exp(beta * q * np.log(1.0 / (2.0 * eta))[None, :]), p


def defaultEpsilon(params: SystemParams) -> float:
    """Largest power of ten meeting the small-k sign bound with a factor 2 margin."""
    _require_subquadratic(params)
    term, p = _eps_term(params)
    off = params.offdiag
    # term * eps^(p-2) > 2  <=>  eps < (term/2)^(1/(2-p))
    bounds = np.exp(np.log(term[off] / 2.0) / (2.0 - p[off]))
    small, _ = _box_edges(params)
    bound = min(float(bounds.min()), float(small.min()))
    e = math.floor(math.log10(bound))
    if 10.0**e >= bound:
        e -= 1
    return 10.0**e


def _eps_ok(params: SystemParams, eps: float, I1, I2) -> bool:
    term, p = _eps_term(params)
    for i in I1:
        if not max(term[i, j] * eps ** (p[i, j] - 2.0) for j in I2) > 1.0:
            return False
    return True


def smallAlphaBoxes(params: SystemParams, epsilon: float | None = None) -> list[Box]:
    """The 2^n - 1 disjoint cuboids for small coupling, all-I_2 box first.

    Box orientation: coordinates in I_1 span (eps, (2 eta_i)^-beta) and have
    reversed sign pattern; I_2 coordinates span ((2 eta_i)^-beta, eta_i^-beta).
    """
    astar = alphaStar(params)
    off = params.offdiag
    if np.any(params.alpha[off] >= astar):
        raise DomainError(
            f"all couplings must be below alpha_* = {astar:.6g}", code="ALPHA_TOO_LARGE", alphaStar=astar
        )
    eps = defaultEpsilon(params) if epsilon is None else float(epsilon)
    mid, top = _box_edges(params)
    n = params.n
    if not eps > 0 or eps >= mid.min():
        raise DomainError("epsilon must lie in (0, min (2 eta_i)^-beta)", code="EPSILON_TOO_LARGE")
    boxes = []
    for size in range(0, n):
        for I1 in itertools.combinations(range(n), size):
            I2 = [i for i in range(n) if i not in I1]
            if I1 and not _eps_ok(params, eps, I1, I2):
                raise DomainError(
                    f"epsilon={eps:g} too large for decomposition I1={[i + 1 for i in I1]}",
                    code="EPSILON_TOO_LARGE",
                )
            lo = np.where(np.isin(np.arange(n), I1), eps, mid)
            hi = np.where(np.isin(np.arange(n), I1), mid, top)
            boxes.append(Box(lo, hi, label="I1=" + ",".join(str(i + 1) for i in I1)))
    return boxes


def superquadraticBox(params: SystemParams, epsilon: float | None = None) -> Box:
    """Cuboid (eps, eta_i^-beta)^n for exponents 2 < p_ij < 2_s^*."""
    exps = derive(params)
    off = params.offdiag
    if not (np.all(params.p[off] > 2.0) and exps.regime in (Regime.SUPERQUADRATIC, Regime.MIXED)):
        raise RegimeError("box defined only for 2 < p_ij < 2_s^*")
    eta, alpha, p, q = _original_matrices(params)
    top = eta ** (-exps.beta)

    def worst_low(eps):
        # max over the face of f_i at k_i = eps, others at their upper ends
        cross = np.where(off, alpha * eps ** (p - 2.0) * top[None, :] ** q, 0.0).sum(axis=1)
        return eta * eps ** (exps.twoStar - 2.0) + cross - 1.0

    if epsilon is None:
        e = math.floor(math.log10(top.min())) - 1
        while np.any(worst_low(10.0**e) > -0.5):
            e -= 1
            if e < -300:
                raise NumericalError("no admissible epsilon", code="EPSILON_TOO_LARGE")
        epsilon = 10.0**e
    if epsilon >= top.min() or np.any(worst_low(epsilon) >= 0):
        raise DomainError("epsilon too large for the lower-face sign condition", code="EPSILON_TOO_LARGE")
    return Box(np.full(params.n, float(epsilon)), top, label="superquadratic")


def gBoxBounds(inverseMatrix, beta: float) -> tuple[float, float]:
    """(eps_max, T_min): any eps < eps_max and T > T_min give a sign box for g."""
    rows = np.asarray(inverseMatrix, float).sum(axis=1)
    if np.any(rows <= 0):
        raise DomainError("row sums of the inverse must be positive", code="ROWSUM_NONPOSITIVE")
    return float(rows.min() ** beta), float(rows.max() ** beta)


def gBox(inverseMatrix, beta: float) -> Box:
    lo, hi = gBoxBounds(inverseMatrix, beta)
    n = np.asarray(inverseMatrix).shape[0]
    return Box(np.full(n, 0.5 * lo), np.full(n, 2.0 * hi), label="transformed")


# ---------------------------------------------------------------- certificate


class Verdict(str, enum.Enum):
    DEGREE_PLUS_MINUS_ONE = "DEGREE_PLUS_MINUS_ONE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class SignCertificate:
    box: Box
    gridPerFace: int
    verdict: Verdict
    signParity: int
    orientation: tuple[int, ...]
    witnesses: list[dict] = field(default_factory=list)

    @property
    def conclusive(self) -> bool:
        return self.verdict is Verdict.DEGREE_PLUS_MINUS_ONE

    def to_dict(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "gridPerFace": self.gridPerFace,
            "verdict": self.verdict.value,
            "signParity": self.signParity,
            "orientation": list(self.orientation),
            "witnesses": self.witnesses,
        }


def mirandaCertify(
    box: Box,
    params: SystemParams,
    gridPerFace: int = 64,
    system: MonomialSystem | None = None,
) -> SignCertificate:
    """Sampled Poincare-Miranda check on the faces of ``box``.

    Coordinate i is +1-oriented if F_i < -tol.root on its lower face and
    > tol.root on its upper face, -1-oriented for the reverse.  The verdict is
    conclusive only if every coordinate is oriented.
    """
    tol = params.tol
    if gridPerFace < tol.gridMin:
        raise ValidationError(f"gridPerFace must be >= {tol.gridMin}", code="GRID_TOO_COARSE")
    sysm = system if system is not None else f_system(params)
    grids = [np.linspace(lo, hi, gridPerFace) for lo, hi in zip(box.lower, box.upper)]
    orient, wit = [], []
    for i in range(box.n):
        lmin, lmax = sysm.face_range(i, box.lower[i], grids)
        umin, umax = sysm.face_range(i, box.upper[i], grids)
        if lmax < -tol.root and umin > tol.root:
            o, margin = 1, min(-lmax, umin)
        elif lmin > tol.root and umax < -tol.root:
            o, margin = -1, min(lmin, -umax)
        else:
            o, margin = 0, max(min(-lmax, umin), min(lmin, -umax))
        orient.append(o)
        wit.append({"index": i + 1, "lower": [lmin, lmax], "upper": [umin, umax], "margin": margin})
    ok = all(orient)
    parity = int(np.prod(orient)) if ok else 1
    return SignCertificate(
        box=box,
        gridPerFace=gridPerFace,
        verdict=Verdict.DEGREE_PLUS_MINUS_ONE if ok else Verdict.INCONCLUSIVE,
        signParity=parity,
        orientation=tuple(orient),
        witnesses=wit,
    )


# --------------------------------------------------------------------- solver


def _newton_log(sysm: MonomialSystem, x0, lo, hi, tol_root: float, max_iter: int = 100):
    """Damped Newton in log-coordinates confined to the open box (lo, hi)."""
    x = np.array(x0, float)
    F = sysm.evaluate_log(x)
    nf = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if nf <= 0.01 * tol_root:
            break
        J = sysm.jacobian_log(x)
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(J, -F, rcond=None)[0]
        if not np.all(np.isfinite(dx)):
            return x, nf
        lam = 1.0
        while lam > 1e-8:
            xn = x + lam * dx
            if np.all(xn > lo) and np.all(xn < hi):
                Fn = sysm.evaluate_log(xn)
                nn = float(np.max(np.abs(Fn)))
                if nn < nf or nn <= 0.01 * tol_root:
                    break
            lam *= 0.5
        else:
            return x, nf
        if np.max(np.abs(xn - x)) < 1e-15:
            x, F, nf = xn, Fn, nn
            break
        x, F, nf = xn, Fn, nn
    return x, nf


def solveInBox(
    box: Box,
    params: SystemParams,
    system: MonomialSystem | None = None,
    gridPerFace: int = 64,
    maxDepth: int = 6,
    certificate: SignCertificate | None = None,
) -> np.ndarray:
    """Locate a zero strictly inside a certified box.

    Newton from the centre first; if that leaves the box or stalls, the box
    is split into 2^n children which are re-certified and searched
    recursively.  Raises NO_CONVERGENCE with the deepest certified sub-box.
    """
    tol = params.tol
    sysm = system if system is not None else f_system(params)
    cert = certificate or mirandaCertify(box, params, gridPerFace, system=sysm)
    if not cert.conclusive:
        raise DomainError("box has no conclusive sign certificate", code="UNCERTIFIED", box=box.to_dict())
    lo_all, hi_all = np.log(box.lower), np.log(box.upper)

    def attempt(b: Box):
        x, nf = _newton_log(sysm, np.log(b.center), lo_all, hi_all, tol.root)
        k = np.exp(x)
        if nf <= tol.root and box.contains(k):
            return k
        return None

    deepest = box
    frontier = [box]
    for depth in range(maxDepth + 1):
        nxt = []
        for b in frontier:
            k = attempt(b)
            if k is not None:
                return k
            if depth < maxDepth:
                for c in b.children():
                    if mirandaCertify(c, params, gridPerFace, system=sysm).conclusive:
                        nxt.append(c)
        if not nxt:
            break
        deepest = nxt[0]
        frontier = nxt
    raise NumericalError(
        "Newton failed in every certified sub-box", code="NO_CONVERGENCE", deepest=deepest.to_dict()
    )
