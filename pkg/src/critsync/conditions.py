"""Sufficient conditions, thresholds and closed-form matrix quantities.

Every check returns a :class:`Verdict` carrying a signed slack, positive when
the condition is satisfied, so that parameter sweeps can locate condition
boundaries by a change of sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import branches
from .errors import DomainError, NumericalError, RegimeError, ValidationError
from .params import DerivedExponents, Regime, SystemParams, Tolerances, derive


@dataclass
class Verdict:
    conditionId: str
    holds: bool
    slack: float
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"conditionId": self.conditionId, "holds": self.holds, "slack": self.slack, "inputs": _plain(self.inputs)}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _verdict(cid: str, slack: float, tol: float, strict: bool = False, scale: float = 1.0, **inputs) -> Verdict:
    """holds <=> slack > 0; |slack| within tol counts as equality."""
    slack = float(slack)
    if math.isnan(slack):
        return Verdict(cid, False, slack, inputs)
    if abs(slack) <= tol * max(1.0, scale):
        return Verdict(cid, not strict, 0.0, inputs)
    return Verdict(cid, slack > 0, slack, inputs)


def _exps(params: SystemParams, exps: DerivedExponents | None) -> DerivedExponents:
    return exps or derive(params)


def _need(cond: bool, msg: str):
    if not cond:
        raise RegimeError(msg, code="WRONG_REGIME")


def _alpha(params: SystemParams) -> float:
    a = params.alpha_constant
    _need(a is not None, "condition needs a common coupling alpha")
    return a


# ------------------------------------------------------------ matrices


@dataclass
class InversePositivityReport:
    matrix: np.ndarray
    inverse: np.ndarray
    offDiagPositive: bool
    rowSumsPositive: bool
    detValue: float

    @property
    def rowSums(self) -> np.ndarray:
        return self.inverse.sum(axis=1)

    @property
    def holds(self) -> bool:
        return self.offDiagPositive and self.rowSumsPositive

    def to_dict(self) -> dict:
        return _plain(
            {
                "matrix": self.matrix,
                "inverse": self.inverse,
                "offDiagPositive": self.offDiagPositive,
                "rowSumsPositive": self.rowSumsPositive,
                "rowSums": self.rowSums,
                "detValue": self.detValue,
            }
        )


def inversePositivity(B, tol: Tolerances | None = None) -> InversePositivityReport:
    """Invert B (LU with partial pivoting) and test the sign pattern of the inverse."""
    tol = tol or Tolerances()
    B = np.array(B, dtype=float)
    n = B.shape[0]
    if B.ndim != 2 or B.shape != (n, n):
        raise ValidationError("matrix must be square", code="DIMENSION_MISMATCH")
    sign, logdet = np.linalg.slogdet(B)
    det = float(sign * math.exp(logdet)) if sign != 0 else 0.0
    scale = float(np.max(np.abs(B))) ** n if n else 1.0
    if sign == 0 or abs(det) < tol.root * scale:
        raise NumericalError("matrix is singular", code="SINGULAR", det=det)
    inv = np.linalg.inv(B)
    err = float(np.max(np.abs(inv @ B - np.eye(n))))
    if err > 1e-10:
        raise NumericalError("inverse check failed", code="SINGULAR", error=err)
    off = ~np.eye(n, dtype=bool)
    return InversePositivityReport(
        matrix=B,
        inverse=inv,
        offDiagPositive=bool(np.all(inv[off] > 0)) if n > 1 else True,
        rowSumsPositive=bool(np.all(inv.sum(axis=1) > 0)),
        detValue=det,
    )


def _check_pole(eta, alpha):
    eta = np.asarray(eta, float)
    if np.any(np.isclose(eta, alpha, rtol=1e-14, atol=0.0)):
        raise DomainError("alpha coincides with a diagonal entry", code="POLE", alpha=alpha)
    return eta


def _delta(eta: np.ndarray, alpha: float) -> float:
    # expanded form avoids the removable singularity of the product form
    d = eta - alpha
    if len(d) == 0:
        return 1.0
    total = float(np.prod(d))
    for k in range(len(d)):
        total += alpha * float(np.prod(np.delete(d, k)))
    return total


def deltaN(eta, alpha: float) -> float:
    """det of the matrix with diagonal eta and every off-diagonal entry alpha."""
    return _delta(_check_pole(eta, alpha), float(alpha))


def aStarEntries(eta, alpha: float) -> np.ndarray:
    """Entries of the inverse of the constant-coupling matrix, in closed form."""
    eta = _check_pole(eta, alpha)
    n = len(eta)
    dn = _delta(eta, alpha)
    if dn == 0.0:
        raise DomainError("determinant vanishes", code="POLE")
    d = eta - alpha
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                out[i, i] = _delta(np.delete(eta, i), alpha) / dn
            else:
                out[i, j] = -alpha * float(np.prod(np.delete(d, [i, j]))) / dn
    return out


def aStarRowSums(eta, alpha: float) -> np.ndarray:
    """Row sums prod_{j != i}(alpha - eta_j) / |Delta_n|, valid for alpha > max eta."""
    eta = _check_pole(eta, alpha)
    if not alpha > eta.max():
        raise DomainError("row-sum closed form needs alpha above every eta", code="WRONG_SIDE")
    dn = abs(_delta(eta, alpha))
    return np.array([np.prod(np.delete(alpha - eta, i)) for i in range(len(eta))]) / dn


def prop31Check(eta, alpha: float, tol: Tolerances | None = None) -> Verdict:
    """Positive inverse for constant coupling above every eta."""
    tol = tol or Tolerances()
    eta = np.sort(np.asarray(eta, float))
    n = len(eta)
    B = np.full((n, n), float(alpha))
    np.fill_diagonal(B, eta)
    rep = inversePositivity(B, tol)
    rs = rep.rowSums
    off = rep.inverse[~np.eye(n, dtype=bool)]
    slack = min(float(off.min()) if n > 1 else math.inf, float(rs.min()))
    return _verdict(
        "prop3.1", slack, tol.root, inverse=rep.inverse, rowSums=rs, alphaRowSums=alpha * rs,
        alphaAboveEta=bool(alpha > eta[-1]),
    )


_TEMPLATE_DIM = {"a": 3, "b": 4, "c": 4}


def _template(kind: str, eta, a1, a2, a3=None) -> np.ndarray:
    eta = list(eta)
    if kind == "a":
        return np.array([[eta[0], a1, a1], [a1, eta[1], a2], [a1, a2, eta[2]]], float)
    if kind == "b":
        B = np.full((4, 4), a2, float)
        B[0, :] = B[:, 0] = a1
        np.fill_diagonal(B, eta)
        return B
    return np.array(
        [[eta[0], a2, a1, a1], [a2, eta[1], a1, a1], [a1, a1, eta[2], a3], [a1, a1, a3, eta[3]]], float
    )


def templateCheck(B, kind: str, tol: Tolerances | None = None) -> Verdict:
    """Template inequalities for one of the three structured couplings, then inverse positivity.

    Template parameters are read as the mean of the entries the template ties
    together; the largest deviation of B from the template is echoed.
    """
    tol = tol or Tolerances()
    kind = str(kind).lower()
    if kind not in _TEMPLATE_DIM:
        raise ValidationError(f"unknown template {kind!r}", code="DIMENSION_MISMATCH")
    B = np.asarray(B, float)
    m = _TEMPLATE_DIM[kind]
    if B.shape != (m, m):
        raise ValidationError(f"template {kind} needs a {m}x{m} matrix", code="DIMENSION_MISMATCH")
    eta = np.diag(B).copy()
    if kind == "a":
        a1 = np.mean([B[0, 1], B[0, 2], B[1, 0], B[2, 0]])
        a2 = np.mean([B[1, 2], B[2, 1]])
        a3 = None
        slacks = {"a1>eta1": a1 - eta[0], "a1>a2": a1 - a2, "a2>=eta2+eta3": a2 - eta[1] - eta[2]}
        strict = {"a1>eta1": True, "a1>a2": True, "a2>=eta2+eta3": False}
    elif kind == "b":
        a1 = np.mean(np.r_[B[0, 1:], B[1:, 0]])
        inner = B[1:, 1:][~np.eye(3, dtype=bool)]
        a2 = float(np.mean(inner))
        a3 = None
        slacks = {"a1>eta1": a1 - eta[0], "a1>a2": a1 - a2, "a2>max(eta2..4)": a2 - eta[1:].max()}
        strict = dict.fromkeys(slacks, True)
    else:
        a1 = np.mean(np.r_[B[:2, 2:].ravel(), B[2:, :2].ravel()])
        a2 = np.mean([B[0, 1], B[1, 0]])
        a3 = np.mean([B[2, 3], B[3, 2]])
        slacks = {
            "a1>=a2": a1 - a2, "a1>=a3": a1 - a3,
            "a2>=eta1+eta2": a2 - eta[0] - eta[1], "a3>=eta3+eta4": a3 - eta[2] - eta[3],
        }
        strict = dict.fromkeys(slacks, False)
    deviation = float(np.max(np.abs(B - _template(kind, eta, a1, a2, a3))))
    ok_template = all(
        (s > tol.root) if strict[k] else (s >= -tol.root) for k, s in slacks.items()
    )
    rep = inversePositivity(B, tol)
    n = m
    off = rep.inverse[~np.eye(n, dtype=bool)]
    inv_slack = min(float(off.min()), float(rep.rowSums.min()))
    slack = min(min(slacks.values()), inv_slack)
    holds = ok_template and rep.holds
    return Verdict(
        f"prop3.2{kind}",
        holds,
        float(slack),
        _plain({"templateSlacks": slacks, "templateHolds": ok_template, "templateDeviation": deviation,
                "inversePositive": rep.holds, "inverse": rep.inverse, "rowSums": rep.rowSums}),
    )


def gamma0Estimate(eta, alpha: float, samples: int = 200, seed: int = 0, iters: int = 40,
                   tol: Tolerances | None = None) -> dict:
    """Empirical radius of off-diagonal perturbation that keeps the inverse positive.

    Bisects on the radius; each trial draws ``samples`` symmetric perturbations
    plus the two uniform shifts. The result is a lower-bound estimate only.
    """
    tol = tol or Tolerances()
    eta = np.sort(np.asarray(eta, float))
    n = len(eta)
    base = np.full((n, n), float(alpha))
    np.fill_diagonal(base, eta)
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    dirs = rng.uniform(-1.0, 1.0, size=(samples, len(iu[0])))
    dirs = np.vstack([dirs, np.ones(len(iu[0])), -np.ones(len(iu[0]))])

    def ok(g):
        for d in dirs:
            P = np.zeros((n, n))
            P[iu] = g * d
            P = P + P.T
            try:
                if not inversePositivity(base + P, tol).holds:
                    return False
            except NumericalError:
                return False
        return True

    if not ok(0.0):
        return {"gamma0": 0.0, "holdsAtZero": False, "samples": samples, "seed": seed}
    lo, hi = 0.0, float(alpha)
    if ok(hi):
        return {"gamma0": hi, "holdsAtZero": True, "samples": samples, "seed": seed, "capped": True}
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return {"gamma0": lo, "holdsAtZero": True, "samples": samples, "seed": seed, "capped": False}


# ------------------------------------------------------- sub-quadratic


def _sub_setup(params, exps, need_below_eta1=True):
    exps = _exps(params, exps)
    _need(exps.regime is Regime.SUBQUADRATIC and 0 < exps.kappa < 1, "needs 0 < kappa < 1")
    alpha = _alpha(params)
    eta = params.eta
    if need_below_eta1:
        _need(alpha < eta[0], "needs alpha < eta_1")
    return exps, alpha, eta


def _lhs49(alpha, eta, exps):
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    return alpha * (eta[-1] - alpha) ** tpb * float(np.sum((eta - alpha) ** (-qb)))


def _rhs49(exps):
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    return exps.kappa**tpb - exps.kappa**qb


def _identity_check(exps):
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    if abs((qb - 1.0) - tpb) > 1e-10 * max(1.0, qb):
        raise NumericalError("exponent identity q*beta - 1 = (2-p)*beta violated", code="NUMERIC")


def cond46(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    """Uniqueness window just below the largest eta."""
    exps = _exps(params, exps)
    _need(exps.regime is Regime.SUBQUADRATIC and 0 < exps.kappa < 1, "needs 0 < kappa < 1")
    alpha = _alpha(params)
    eta = params.eta
    _need(params.n >= 2 and eta[-2] < alpha < eta[-1], "needs eta_{n-1} < alpha < eta_n")
    qb = exps.qCommon * exps.beta
    sum_term = float(np.sum(1.0 / (eta[-1] - eta[:-1])))
    slack = 1.0 / alpha + qb / (eta[-1] - alpha) - sum_term
    closeness = eta[-1] - qb / sum_term
    return _verdict("lem4.5", slack, params.tol.root, scale=sum_term, qBeta=qb, sumTerm=sum_term,
                    simpleBound=closeness, simpleBoundHolds=bool(closeness <= alpha), predictedTotal=1)


def cond49(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    exps, alpha, eta = _sub_setup(params, exps)
    _identity_check(exps)
    lhs, rhs = _lhs49(alpha, eta, exps), _rhs49(exps)
    return _verdict("lem4.6", rhs - lhs, params.tol.root, lhs=lhs, rhs=rhs, predictedLowerBound=2**params.n - 1)


def _multiplicity_simple(alpha, eta, exps, n) -> dict:
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    x = 1.0 / tpb
    b1 = eta[0] / 2.0
    b2 = (2.0**x - 1.0) / (n - 1) * eta[-1]
    b3 = (1.0 / (2.0 * tpb)) * exps.kappa**qb * eta[-1] ** (1.0 - qb) / float(np.sum((eta - eta[0] / 2.0) ** (-qb)))
    return {"bounds": [b1, b2, b3], "holds": bool(alpha <= min(b1, b2, b3))}


def cond4_10_11(params: SystemParams, exps: DerivedExponents | None = None, xi: float = 0.5) -> Verdict:
    """Exact multiplicity test with a split parameter xi in (0, 1).

    The second inequality is evaluated in the rearranged form
    alpha * [(n-1)/(xi^((kappa-1)/kappa) - 1) - 1/(1-kappa)] <= eta_n - alpha;
    the literal form with (2-p)*beta is echoed alongside.
    """
    exps, alpha, eta = _sub_setup(params, exps)
    if not 0.0 < xi < 1.0:
        raise ValidationError("xi must lie in (0, 1)", code="INVALID")
    _identity_check(exps)
    n, k = params.n, exps.kappa
    tpb = (2.0 - exps.p) * exps.beta
    lhs10, rhs10 = _lhs49(alpha, eta, exps), xi * _rhs49(exps)
    s10 = rhs10 - lhs10
    den = xi ** ((k - 1.0) / k) - 1.0
    lhs11 = alpha * ((n - 1) / den - 1.0 / (1.0 - k)) if den > 0 else math.inf
    s11 = (eta[-1] - alpha) - lhs11
    den_p = xi ** (-1.0 / tpb) - 1.0
    lhs11p = alpha * ((n - 1) / den_p - tpb) if den_p > 0 else math.inf
    s11p = eta[-1] - lhs11p
    tol = params.tol.root
    v10 = _verdict("eq", s10, tol)
    v11 = _verdict("eq", s11, tol)
    holds = v10.holds and v11.holds
    slack = min(v10.slack, v11.slack)
    return Verdict(
        "lem4.7", holds, slack,
        _plain({"xi": xi, "first": {"lhs": lhs10, "rhs": rhs10, "slack": s10},
                "second": {"lhs": lhs11, "rhs": eta[-1] - alpha, "slack": s11},
                "secondLiteral": {"lhs": lhs11p, "rhs": eta[-1], "slack": s11p},
                "simpleBounds": _multiplicity_simple(alpha, eta, exps, n),
                "predictedTotal": 2**n - 1}),
    )


def chiValues(alpha: float, eta, exps: DerivedExponents) -> np.ndarray:
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    inner = alpha * float(np.sum((np.asarray(eta) - alpha) ** (-qb)))
    return exps.kappa * qb ** (-1.0 / tpb) * inner ** (-1.0 / tpb) - (np.asarray(eta) - alpha)


def cond4_12_13(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    """Strict peak inequality plus the derivative bound built on chi_i."""
    exps, alpha, eta = _sub_setup(params, exps)
    _identity_check(exps)
    n = params.n
    qb = exps.qCommon * exps.beta
    tpb = (2.0 - exps.p) * exps.beta
    lhs12, rhs12 = _lhs49(alpha, eta, exps), _rhs49(exps)
    tol = params.tol.root
    v12 = _verdict("eq", rhs12 - lhs12, tol, strict=True)
    chi = chiValues(alpha, eta, exps)
    chi_tail = chi[1:]
    b1, b2 = eta[0] / 2.0, eta[-1] / (n - 1)
    b3 = (1.0 / tpb) * exps.kappa**qb * (2.0 * eta[-1]) ** (1.0 - qb) / float(np.sum((eta - eta[0] / 2.0) ** (-qb)))
    simple = {"bounds": [b1, b2, b3], "holds": bool(alpha < b1 and alpha <= b2 and alpha <= b3)}
    info = {"first": {"lhs": lhs12, "rhs": rhs12, "slack": rhs12 - lhs12}, "chi": chi,
            "simpleBounds": simple, "predictedTotal": 2**n - 1}
    if np.any(chi_tail <= 0):
        info["code"] = "CHI_NONPOSITIVE"
        return Verdict("lem4.8", False, float(min(v12.slack, chi_tail.min())), _plain(info))
    lhs13 = float(np.sum(alpha / chi_tail)) - qb * alpha / (eta[-1] - alpha)
    v13 = _verdict("eq", 1.0 - lhs13, tol)
    info["second"] = {"lhs": lhs13, "rhs": 1.0, "slack": 1.0 - lhs13}
    return Verdict("lem4.8", v12.holds and v13.holds, min(v12.slack, v13.slack), _plain(info))


def cond22d(m: int, etaLow: float, etaHigh: float, alpha: float, tol: Tolerances | None = None) -> Verdict:
    """Threshold on alpha for uniqueness with two groups of m equal etas."""
    tol = tol or Tolerances()
    if m < 1 or not etaLow <= etaHigh or etaLow <= 0:
        raise ValidationError("needs m >= 1 and 0 < etaLow <= etaHigh", code="WRONG_ORDER")
    e1, e2 = float(etaLow), float(etaHigh)
    disc = (m + 1) ** 2 * e2**2 + (m - 1) ** 2 * e1**2 - 2 * (m**2 + 1) * e1 * e2
    if disc < -1e-12 * max(e1, e2) ** 2:
        raise NumericalError("discriminant negative for ordered inputs", code="NUMERIC", disc=disc)
    b = (m + 1) * e2 - (m - 1) * e1
    thr = 0.5 * (b + math.sqrt(max(disc, 0.0)))
    quad = alpha**2 - b * alpha + e1 * e2
    v = _verdict("thm2.2d", alpha - thr, tol.root, scale=thr, threshold=thr, quadratic=quad,
                 alphaAboveEtaHigh=bool(alpha > e2), predictedTotal=1)
    if v.holds and v.slack > 0 and not quad > 0:
        raise NumericalError("threshold and quadratic forms disagree", code="NUMERIC")
    return v


def pairOrdering(m: int, etaLow: float, etaHigh: float, alpha: float, t1: float, tm1: float,
                 tol: Tolerances | None = None) -> Verdict:
    """Ordering relations between the two group values t_1 and t_{m+1}."""
    tol = tol or Tolerances()
    r1 = tm1 - t1
    r2 = (alpha - etaLow) * t1 - (alpha - etaHigh) * tm1
    r3 = m * alpha * t1 - (etaHigh + (m - 1) * alpha) * tm1
    v1, v2 = _verdict("r", r1, tol.root), _verdict("r", r2, tol.root)
    v3 = _verdict("r", r3, tol.root, strict=True)
    return Verdict("thm2.2d-pairs", v1.holds and v2.holds and v3.holds, min(v1.slack, v2.slack, v3.slack),
                   {"t1": t1, "tm1": tm1, "ordered": r1, "scaled": r2, "strict": r3})


def pairOrderingFromCount(m: int, etaLow: float, etaHigh: float, alpha: float, p: float, N: float, s: float,
                          tol: Tolerances | None = None) -> Verdict:
    from .counting import countSynchronized
    from .params import validate

    params = validate({"n": 2 * m, "N": N, "s": s, "eta": [etaLow] * m + [etaHigh] * m, "alpha": alpha, "p": p})
    rep = countSynchronized(params)
    if rep.total != 1:
        raise NumericalError("expected a unique solution", code="NUMERIC", total=rep.total)
    t = rep.solutions[0].t
    return pairOrdering(m, etaLow, etaHigh, alpha, float(t[0]), float(t[m]), tol or params.tol)


# ----------------------------------------------------- super-quadratic


def _super_setup(params, exps):
    exps = _exps(params, exps)
    _need(exps.regime is Regime.SUPERQUADRATIC and exps.kappa < 0, "needs kappa < 0")
    return exps, _alpha(params), params.eta


def cond25c(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    """Exponent threshold between 2 and 2* weighted by eta_1/alpha."""
    exps, alpha, eta = _super_setup(params, exps)
    _need(alpha > eta[0], "needs alpha > eta_1")
    w = eta[0] / alpha
    thr = w * 2.0 + (1.0 - w) * exps.twoStar
    slack = exps.p - thr
    alt = eta[0] - (eta[0] - alpha) / exps.kappa
    v = _verdict("thm2.5c", slack, params.tol.root, threshold=thr, equivalentSlack=alt, predictedTotal=1)
    alt_holds = alt >= -params.tol.root * max(1.0, eta[0])
    if v.holds != alt_holds:
        raise NumericalError("equivalent forms disagree", code="NUMERIC", slack=slack, equivalentSlack=alt)
    return v


def delta0Check(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    exps, alpha, eta = _super_setup(params, exps)
    _need(params.n >= 2 and eta[0] < alpha < eta[1], "needs eta_1 < alpha < eta_2")
    slack = -float(np.sum(alpha / (eta[1:] - eta[0]))) + alpha / (alpha - eta[0]) - 1.0
    return _verdict("thm2.5a", slack, params.tol.root, predictedTotal=1)


def lemma73Bounds(params: SystemParams, exps: DerivedExponents | None = None) -> Verdict:
    exps, alpha, eta = _super_setup(params, exps)
    if not exps.kappa > -1.0:
        raise RegimeError("needs p < 1 + 2*/2", code="WRONG_REGIME")
    _need(alpha > eta[0], "needs alpha > eta_1")
    A = branches.peak(params, exps).A
    r = math.sqrt(alpha - eta[0])
    lo = min(1.0, r)
    hi = (math.e ** (1.0 / math.e) + 1.0) * max(1.0, r)
    return _verdict("lem7.3", min(A - lo, hi - A), params.tol.root, A=A, lower=lo, upper=hi)


@dataclass
class RatioTable:
    rows: list[dict]
    tailSpread: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {"rows": _plain(self.rows), "tailSpread": self.tailSpread, "verdict": self.verdict.to_dict()}


def lemma74Ratio(params: SystemParams, exps: DerivedExponents | None = None, xi: float = 0.5,
                 pSequence=None, j: int = 1) -> RatioTable:
    """Branch point T''_j along p -> 2+, divided by (p-2)^xi.

    ``j`` is a 1-based canonical index. The verdict holds when the ratio
    varies by less than a factor 10 over the last half of the sequence.
    """
    if not 0.0 < xi < 1.0:
        raise ValidationError("xi must lie in (0, 1)", code="INVALID")
    alpha = _alpha(params)
    if pSequence is None:
        pSequence = [2.0 + 10.0**-k for k in range(1, 7)]
    i = j - 1
    _need(alpha > params.eta[i], "needs alpha > eta_j")
    rows = []
    for p in pSequence:
        pr = params.updated(p=p)
        e = derive(pr)
        _need(e.regime is Regime.SUPERQUADRATIC and e.kappa < 0, "needs kappa < 0 along the sequence")
        table = branches.buildTable(pr, e)
        t2 = float(table.TdoublePrime[i])
        ratio = t2 / (p - 2.0) ** xi
        rows.append({"p": p, "TdoublePrime": t2, "ratio": ratio, "A": table.A,
                     "boundHolds": bool(t2 <= table.A / (alpha - params.eta[i]) * (1 + 1e-12))})
    tail = [r["ratio"] for r in rows[len(rows) // 2:]]
    spread = max(tail) / min(tail)
    v = _verdict("lem7.4", 10.0 - spread, params.tol.root, xi=xi, tailSpread=spread)
    return RatioTable(rows, spread, v)
