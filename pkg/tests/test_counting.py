import math

import numpy as np
import pytest

from critsync.boxes import evalF
from critsync.branches import buildTable
from critsync.counting import (
    INFINITE,
    NONE,
    closedFormP2,
    countAlphaLarge,
    countSubsets,
    countSynchronized,
    existenceReport,
    gSubset,
    recoverK,
)
from critsync.errors import DomainError, RegimeError
from critsync.params import derive, validate
from conftest import make


def _max_residual(rep, pr):
    return max((float(np.max(np.abs(evalF(s.k, pr)))) for s in rep.solutions), default=0.0)


def test_gsubset_examples():
    pr = make(alpha=0.05, p=1.0)
    tab = buildTable(pr)
    # the symmetric root lies past T on the falling branch of both maps
    tau = 0.05 * 2 * (1 / 1.05) ** 2
    assert gSubset(tau, (0, 1), tab) == pytest.approx(0.0, abs=1e-14)
    assert gSubset(tau, (), tab) < 0
    small = 1e-6
    assert gSubset(small, (), tab) == pytest.approx(-small, rel=1e-3)
    full = gSubset(1e-12, (0, 1), tab)
    assert full == pytest.approx(0.05 * tab.S.sum(), rel=1e-6)


def test_gsubset_rejects_absent_branch():
    tab = buildTable(make(eta=[0.2, 1.0], alpha=0.5, p=1.0))
    with pytest.raises(DomainError):
        gSubset(0.1, (0,), tab)


def test_recover_k():
    e = derive(make(p=1.0))
    assert np.allclose(recoverK([4 / 9, 4 / 9], e), [2 / 3, 2 / 3])
    assert np.allclose(recoverK([1.0, 1.0, 1.0], e), 1.0)
    assert np.allclose(recoverK([1 / 9, 1 / 9], e), [1 / 3, 1 / 3])
    with pytest.raises(DomainError):
        recoverK([0.0, 1.0], e)


def test_alpha_large_symmetric_closed_forms():
    rep = countAlphaLarge(make(alpha=2.0, p=1.0))
    assert rep.total == 1
    s = rep.solutions[0]
    assert s.tau == pytest.approx(4 / 9)
    assert np.allclose(s.t, 1 / 9) and np.allclose(s.k, 1 / 3)
    rep = countAlphaLarge(make(n=3, alpha=2.0, p=1.0))
    assert rep.total == 1 and np.allclose(rep.solutions[0].k, 0.2)


def test_alpha_equal_to_largest_eta():
    assert countSynchronized(make(eta=[0.5, 1.0], alpha=1.0, p=1.0)).total == 1


def test_subsets_small_alpha():
    rep = countSubsets(make(alpha=0.05, p=1.0))
    assert (rep.total, rep.rhoStar, rep.rhoStarStar) == (3, 0, 3)
    ks = sorted(tuple(np.round(s.k, 10)) for s in rep.solutions)
    assert ks[0][::-1] == ks[2]  # swapped pair


def test_subsets_superquadratic_unique():
    assert countSubsets(make(alpha=0.5, p=2.4)).total == 1


def test_closed_form_p2():
    rep = closedFormP2(make(eta=[1.0, 2.0], alpha=3.0, p=2.0))
    assert rep.total == 1 and np.allclose(rep.solutions[0].k, [1 / 7, 2 / 7], atol=1e-12)
    rep = closedFormP2(make(eta=[2.0, 1.0], alpha=3.0, p=2.0))
    assert np.allclose(rep.solutions[0].k, [2 / 7, 1 / 7], atol=1e-12)
    assert np.allclose(closedFormP2(make(alpha=3.0, p=2.0)).solutions[0].k, 0.25)
    assert closedFormP2(make(eta=[1.0, 2.0], alpha=1.5, p=2.0)).total == NONE
    rep = closedFormP2(make(alpha=1.0, p=2.0))
    assert rep.total == INFINITE and rep.count == math.inf
    assert np.max(np.abs(evalF(rep.solutions[0].k, make(alpha=1.0, p=2.0)))) < 1e-12


def test_closed_form_below_eta1():
    pr = make(eta=[1.0, 2.0], alpha=0.5, p=2.0)
    rep = closedFormP2(pr)
    assert rep.total == 1 and _max_residual(rep, pr) < 1e-12


def test_closed_form_wrong_regime():
    with pytest.raises(RegimeError):
        closedFormP2(make(p=1.0))


def test_dispatch_examples():
    assert countSynchronized(make(alpha=0.05, p=1.0)).total == 3
    assert countSynchronized(make(eta=[1.0, 2.0], alpha=1.5, p=2.0)).total == NONE
    assert countSynchronized(make(alpha=2.0, p=2.7)).total == 1


def test_original_order_in_solutions():
    pr = make(n=3, eta=[1.3, 0.9, 1.1], alpha=0.02, p=1.0)
    rep = countSynchronized(pr)
    assert rep.total == 7
    assert _max_residual(rep, pr) <= 1e-10
    for s in rep.solutions:
        assert all(1 <= a <= 3 for a in s.assignment)


def test_report_serialises():
    d = countSynchronized(make(alpha=0.05, p=1.0)).to_dict()
    assert d["total"] == 3 and len(d["solutions"]) == 3
    assert {"regime", "method", "certificates", "notes"} <= d.keys()


def test_mixed_exponents_give_lower_bound():
    pr = validate({"n": 2, "N": 3, "s": 0.5, "eta": [1, 1], "alpha": 0.05, "p": [[0, 1.0], [1.2, 0]]})
    rep = countSynchronized(pr)
    assert rep.lowerBound and rep.total == 3
    assert _max_residual(rep, pr) <= 1e-10


def test_existence_report_superquadratic_box():
    rep = existenceReport(make(alpha=0.3, p=2.4))
    assert rep.lowerBound and rep.total == 1
    assert np.allclose(rep.solutions[0].k, 1 / 1.3, atol=1e-10)


def test_near_quadratic_many_solutions():
    pr = make(alpha=2.0, p=2.05)
    rep = countSynchronized(pr)
    assert rep.total == 3 and _max_residual(rep, pr) <= 1e-10


def test_counts_invariant_under_relabelling():
    a = countSynchronized(make(n=3, eta=[0.8, 1.0, 1.5], alpha=0.6, p=1.2))
    b = countSynchronized(make(n=3, eta=[1.5, 0.8, 1.0], alpha=0.6, p=1.2))
    assert a.total == b.total
    ka = sorted(tuple(np.round(s.k, 8)) for s in a.solutions)
    kb = sorted(tuple(np.round(s.k[[1, 2, 0]], 8)) for s in b.solutions)
    assert ka == kb
