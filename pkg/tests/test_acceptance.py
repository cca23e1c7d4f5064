"""Acceptance suite. Each test carries a criterion marker; the terminal
summary prints one PASS/FAIL line per criterion."""

import math
import time

import numpy as np
import pytest

from critsync import conditions as C
from critsync.boxes import evalF
from critsync.counting import countSubsets, countSynchronized
from critsync.errors import RegimeError
from critsync.oracle import gridScanCount, scalarScanCount
from critsync.params import derive, validate

RES_TOL = 1e-10
REPORTS = []  # (label, params, report) gathered for the residual check


def _keep(label, params, rep):
    REPORTS.append((label, params, rep))
    return rep


def _p_from_kappa(kappa, two_star=3.0):
    return (2.0 - two_star * kappa) / (1.0 - kappa)


def _pr(eta, alpha, p, N=3, s=0.5):
    return validate({"n": len(eta), "N": N, "s": s, "eta": list(map(float, eta)), "alpha": float(alpha), "p": float(p)})


def _non_boundary(rep):
    return not rep.ambiguous and all(abs(c.get("G_at_A", 1.0)) >= 1e-9 for c in rep.certificates)


@pytest.mark.criterion(1, "maximal multiplicity 2^n-1 for p=1, equal eta, small coupling")
@pytest.mark.parametrize("n, alpha", [(2, 0.05), (3, 0.02), (4, 0.02)])
def test_maximal_multiplicity(n, alpha):
    pr = _pr([1.0] * n, alpha, 1.0)
    assert C.cond4_10_11(pr, xi=0.5).holds
    t0 = time.perf_counter()
    rep = _keep("maximal", pr, countSynchronized(pr))
    elapsed = time.perf_counter() - t0
    assert rep.total == 2**n - 1
    assert _keep("maximal-oracle", pr, scalarScanCount(pr)).total == 2**n - 1
    assert elapsed < 10.0


@pytest.mark.criterion(2, "uniqueness for p<2 with alpha above eta_n or in the window")
def test_subquadratic_uniqueness():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(2, 5))
        eta = np.sort(rng.uniform(0.5, 2.0, n))
        alpha = eta[-1] * rng.uniform(1.0, 5.0)
        p = rng.uniform(0.1, 1.95)
        pr = _pr(eta, alpha, p)
        assert _keep("unique", pr, countSynchronized(pr)).total == 1
    window = 0
    while window < 30:
        n = int(rng.integers(2, 5))
        eta = np.sort(rng.uniform(0.5, 2.0, n))
        if eta[-1] - eta[-2] < 0.05:
            continue
        alpha = rng.uniform(eta[-2], eta[-1])
        pr = _pr(eta, alpha, rng.uniform(0.1, 1.95))
        if not C.cond46(pr).holds:
            continue
        window += 1
        assert _keep("window", pr, countSynchronized(pr)).total == 1
    assert time.perf_counter() - t0 < 30.0


@pytest.mark.criterion(3, "quadratic trichotomy: one, none, infinitely many")
def test_quadratic_trichotomy():
    pr = _pr([1, 2], 3, 2)
    rep = _keep("p2-one", pr, countSynchronized(pr))
    assert rep.total == 1
    assert np.allclose(rep.solutions[0].k, [1 / 7, 2 / 7], rtol=0, atol=1e-10)
    assert countSynchronized(_pr([1, 2], 1.5, 2)).total == "NONE"
    pr = _pr([1, 1], 1, 2)
    assert _keep("p2-inf", pr, countSynchronized(pr)).total == "INFINITE"


@pytest.mark.criterion(4, "uniqueness for p>2 near the critical exponent and for small coupling")
def test_superquadratic_uniqueness():
    pr = _pr([1, 1], 0.5, 2.4)
    assert _keep("super-small", pr, countSynchronized(pr)).total == 1
    pr = _pr([1, 1], 2.0, 2.7)
    assert derive(pr).twoStar == pytest.approx(3.0)
    assert _keep("super-large", pr, countSynchronized(pr)).total == 1
    assert C.cond25c(pr).slack == pytest.approx(0.2, abs=1e-12)


@pytest.mark.criterion(5, "at least three roots just above p=2, engine and oracle agree")
def test_three_roots_near_quadratic():
    pr = _pr([1, 1], 2.0, 2.05)
    rep = _keep("near-2", pr, countSubsets(pr))
    assert rep.total >= 3
    assert all(np.max(np.abs(evalF(s.k, pr))) <= RES_TOL for s in rep.solutions)
    assert _keep("near-2-oracle", pr, scalarScanCount(pr)).total == rep.total


@pytest.mark.criterion(6, "peak level stays within its two-sided bound")
def test_peak_level_bound_suite():
    rng = np.random.default_rng(6)
    for _ in range(50):
        kappa = rng.uniform(-0.99, -0.01)
        alpha = math.exp(rng.uniform(math.log(1.01), math.log(50.0)))
        v = C.lemma73Bounds(_pr([1.0, 1.0], alpha, _p_from_kappa(kappa)))
        r = math.sqrt(alpha - 1.0)
        lo, hi = min(1.0, r), (math.e ** (1 / math.e) + 1) * max(1.0, r)
        assert lo <= v.inputs["A"] <= hi


@pytest.mark.criterion(7, "branch point ratio varies by less than 10x over the tail")
def test_branch_point_ratio_tail():
    tab = C.lemma74Ratio(_pr([1, 1], 2.0, 2.4), xi=0.5)
    assert [r["p"] for r in tab.rows] == pytest.approx([2 + 10.0**-k for k in range(1, 7)])
    tail = [r["ratio"] for r in tab.rows[-3:]]
    assert max(tail) / min(tail) < 10.0


@pytest.mark.criterion(8, "closed-form inverse and determinant; row sums near 1/alpha")
def test_closed_form_matrix_suite():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        eta = np.sort(rng.uniform(0.2, 3.0, n))
        alpha = eta[-1] * math.exp(rng.uniform(math.log(1.001), math.log(20.0)))
        B = np.full((n, n), alpha)
        np.fill_diagonal(B, eta)
        inv = np.linalg.inv(B)
        assert np.max(np.abs(C.aStarEntries(eta, alpha) - inv)) <= 1e-10 * max(1.0, np.max(np.abs(inv)))
        det = np.linalg.det(B)
        assert abs(C.deltaN(eta, alpha) - det) <= 1e-10 * max(1.0, abs(det))
    for _ in range(50):
        eta = np.sort(rng.uniform(0.2, 3.0, 2))
        alpha = 100 * eta[-1]
        assert np.allclose(C.aStarRowSums(eta, alpha), 1 / alpha, rtol=0.1)


def test_row_sums_scale_with_group_size():
    # outside two groups the row sums approach 1/((n-1) alpha)
    for n in (3, 4, 6):
        eta = np.linspace(1.0, 2.0, n)
        alpha = 1e4
        assert np.allclose(C.aStarRowSums(eta, alpha), 1 / ((n - 1) * alpha), rtol=1e-3)


def _sample_scalar(rng, kappa_band):
    n = int(rng.integers(2, 4))
    eta = np.round(rng.uniform(0.5, 2.0, n), 2) if rng.random() < 0.7 else np.ones(n)
    alpha = math.exp(rng.uniform(math.log(0.01), math.log(5.0)))
    return _pr(eta, alpha, _p_from_kappa(rng.uniform(*kappa_band)))


@pytest.mark.criterion(9, "engine and independent oracle agree in every regime")
@pytest.mark.parametrize("regime", ["sub", "quadratic", "super"])
def test_oracle_equivalence(regime):
    rng = np.random.default_rng({"sub": 91, "quadratic": 92, "super": 93}[regime])
    checked, mismatches = 0, []
    while checked < 200:
        if regime == "quadratic":
            n = int(rng.integers(2, 4))
            eta = np.sort(np.round(rng.uniform(0.5, 2.0, n), 3))
            alpha = math.exp(rng.uniform(math.log(0.05), math.log(5.0)))
            if np.min(np.abs(alpha - eta)) < 1e-3:
                continue
            pr = _pr(eta, alpha, 2.0)
            eng = countSynchronized(pr)
            if eng.total == "INFINITE":
                continue
            orc = gridScanCount(pr)
            want = 0 if eng.total == "NONE" else eng.total
        else:
            pr = _sample_scalar(rng, (0.05, 0.95) if regime == "sub" else (-5.0, -0.05))
            eng = countSynchronized(pr)
            if not _non_boundary(eng):
                continue
            orc = scalarScanCount(pr)
            want = eng.total
        _keep(regime, pr, eng)
        _keep(regime + "-oracle", pr, orc)
        checked += 1
        if orc.total != want:
            mismatches.append((pr.to_dict(), eng.total, orc.total))
    assert mismatches == []


@pytest.mark.criterion(10, "every reported solution has residual at most 1e-10")
def test_residual_soundness():
    assert len(REPORTS) > 500
    worst = 0.0
    for label, pr, rep in REPORTS:
        for s in rep.solutions:
            if not np.all(np.isfinite(s.k)):
                continue
            worst = max(worst, float(np.max(np.abs(evalF(s.k, pr)))))
    assert worst <= RES_TOL
