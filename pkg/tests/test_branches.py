import math

import numpy as np
import pytest

from critsync.branches import (
    SUB_LARGE,
    SUB_SMALL,
    SUPER_LARGE,
    SUPER_SMALL,
    branchPoints,
    buildTable,
    buildTableFrom,
    fScalar,
    gPrime,
    hInverse,
    kInverse,
    peak,
    sBound,
)
from critsync.errors import DomainError, RegimeError
from conftest import make

HALF = 0.5
NEG = -2.0 / 3.0


def test_fscalar_examples():
    assert fScalar(1.0, 0, 0.5, HALF, [1.0]) == pytest.approx(0.5)
    assert fScalar(4 / 9, 0, 0.5, HALF, [1.0]) == pytest.approx(4 / 9)
    assert fScalar(1.0, 0, 2.0, NEG, [1.0]) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        fScalar(0.0, 0, 0.5, HALF, [1.0])


def test_peak_subquadratic():
    pk = peak(make(alpha=0.5, p=1.0))
    assert (pk.A, pk.T, pk.pivotIndex) == (pytest.approx(0.5), pytest.approx(1.0), 2)
    pk = peak(make(eta=[1.0, 1.25], alpha=1.0, p=1.0))
    assert pk.A == pytest.approx(1.0) and pk.T == pytest.approx(4.0)


def test_peak_superquadratic():
    pk = peak(make(alpha=2.0, p=2.4))
    expected = (2 / 3) ** (-2 / 5) + (2 / 3) ** (3 / 5)
    assert pk.A == pytest.approx(expected, rel=1e-13)
    assert pk.A == pytest.approx(1.9601317, abs=1e-7)
    assert fScalar(pk.T, 0, 2.0, NEG, [1.0]) == pytest.approx(pk.A, rel=1e-13)


def test_peak_wrong_side():
    with pytest.raises(DomainError):
        peak(make(alpha=1.5, p=1.0))
    with pytest.raises(DomainError):
        peak(make(alpha=0.5, p=2.4))
    with pytest.raises(RegimeError):
        peak(make(alpha=0.5, p=2.0))


def test_s_bound():
    assert sBound(0, make(alpha=0.5, p=1.0)) == pytest.approx(4.0)
    assert fScalar(4.0, 0, 0.5, HALF, [1.0]) == pytest.approx(0.0, abs=1e-14)
    assert math.isinf(sBound(0, make(alpha=1.0, p=1.0)))
    assert sBound(1, make(eta=[1.0, 2.0], alpha=1.0, p=2.4)) == pytest.approx(1.0)


def test_branch_points_at_pivot():
    assert branchPoints(1, None, make(alpha=0.5, p=1.0)) == (pytest.approx(1.0), pytest.approx(1.0))
    pk = peak(make(alpha=2.0, p=2.4))
    tp, tpp = branchPoints(0, pk, make(alpha=2.0, p=2.4))
    assert tp == pytest.approx(pk.T) and tpp == pytest.approx(pk.T)


def test_branch_points_bracket_the_level():
    pr = make(n=3, eta=[0.7, 1.0, 1.4], alpha=0.3, p=1.0)
    tab = buildTable(pr)
    assert tab.mode == SUB_SMALL
    for i in range(3):
        tp, tpp = branchPoints(i, None, pr)
        assert tp < tpp if i < 2 else tp == tpp == pytest.approx(tab.T)
        assert fScalar(tp, i, 0.3, HALF, pr.eta) == pytest.approx(tab.A, rel=1e-12)
        assert fScalar(tpp, i, 0.3, HALF, pr.eta) == pytest.approx(tab.A, rel=1e-12)


def test_branch_absent():
    pr = make(eta=[0.2, 1.0], alpha=0.5, p=1.0)
    with pytest.raises(DomainError) as ei:
        branchPoints(0, None, pr)
    assert ei.value.code == "BRANCH_ABSENT"
    with pytest.raises(DomainError):
        kInverse(0, 0.1, buildTable(pr))


def test_inverses_examples():
    tab = buildTable(make(alpha=0.5, p=1.0))
    assert hInverse(0, 3 / 8, tab) == pytest.approx(0.25, rel=1e-13)
    assert kInverse(0, 3 / 8, tab) == pytest.approx(2.25, rel=1e-13)
    assert hInverse(0, tab.A, tab) == pytest.approx(tab.Tprime[0], rel=1e-7)
    assert kInverse(0, tab.A, tab) == pytest.approx(tab.TdoublePrime[0], rel=1e-7)
    large = buildTable(make(alpha=2.0, p=1.0))
    assert large.mode == SUB_LARGE
    assert hInverse(0, 4 / 9, large) == pytest.approx(1 / 9, rel=1e-13)


def test_out_of_domain():
    tab = buildTable(make(alpha=0.5, p=1.0))
    with pytest.raises(DomainError) as ei:
        hInverse(0, 0.6, tab)
    assert ei.value.code == "OUT_OF_DOMAIN"


@pytest.mark.parametrize(
    "eta, alpha, kappa, mode",
    [
        ([0.5, 1.0, 2.0], 0.7, 0.4, SUB_SMALL),
        ([0.5, 1.0, 2.0], 2.5, 0.4, SUB_LARGE),
        ([0.5, 1.0, 2.0], 0.3, -1.5, SUPER_SMALL),
        ([0.5, 1.0, 2.0], 1.5, -1.5, SUPER_LARGE),
    ],
)
def test_inverses_are_right_inverses(eta, alpha, kappa, mode):
    tab = buildTableFrom(eta, alpha, kappa)
    assert tab.mode == mode
    lo, hi, _, _ = tab.h_domain()
    lo = lo if lo > 0 else 1e-3
    hi = hi if math.isfinite(hi) else 10.0 * max(lo, 1.0)
    taus = np.geomspace(lo * 1.0001, hi * 0.9999, 25)
    H = tab.h_all(taus)
    for j in range(len(eta)):
        vals = H[:, j] ** kappa + (alpha - eta[j]) * H[:, j]
        assert np.allclose(vals, taus, rtol=1e-12)
    if mode in (SUB_SMALL, SUPER_LARGE):
        K = tab.k_all(taus)
        for j in np.flatnonzero(tab.hasK):
            vals = K[:, j] ** kappa + (alpha - eta[j]) * K[:, j]
            assert np.allclose(vals, taus, rtol=1e-11)
            assert np.all(K[:, j] >= H[:, j])


def test_gprime_sign_in_large_mode():
    # G rises through its unique zero: 2 * 2 / 2.5 - 1
    tab = buildTable(make(alpha=2.0, p=1.0))
    t = tab.h_all(np.array(4 / 9))
    assert gPrime(t, tab) == pytest.approx(0.6)


def test_table_rejects_unsorted_eta_and_kappa_zero():
    with pytest.raises(DomainError):
        buildTableFrom([2.0, 1.0], 0.5, 0.5)
    with pytest.raises(RegimeError):
        buildTableFrom([1.0, 2.0], 0.5, 0.0)
