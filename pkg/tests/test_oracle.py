import numpy as np
import pytest

from critsync.counting import countSynchronized
from critsync.errors import DomainError, RegimeError, ValidationError
from critsync.oracle import ScanConfig, gridScanCount, residual, scalarScanCount
from conftest import make


def _ks(rep):
    return sorted(tuple(np.round(s.k, 7)) for s in rep.solutions)


def test_scan_config_invariants():
    ScanConfig()
    with pytest.raises(ValidationError):
        ScanConfig(pointsPerDecade=8)
    with pytest.raises(ValidationError):
        ScanConfig(tauFloor=1.0, tauCeil=0.5)


def test_residual_examples():
    pr = make(alpha=0.5, p=1.0)
    assert residual([2 / 3, 2 / 3], pr) <= 1e-12
    assert residual([1.0, 1.0], pr) == pytest.approx(0.5)
    with pytest.raises(DomainError) as ei:
        residual([1.0, -1.0], pr)
    assert ei.value.code == "NONPOSITIVE_K"


def test_scalar_scan_examples():
    assert scalarScanCount(make(alpha=0.05, p=1.0)).total == 3
    assert scalarScanCount(make(alpha=2.0, p=1.0)).total == 1
    with pytest.raises(RegimeError):
        scalarScanCount(make(eta=[1, 2], alpha=3.0, p=2.0))


def test_scalar_scan_solutions_are_residual_verified():
    pr = make(n=3, eta=[0.9, 1.0, 1.2], alpha=0.02, p=1.0)
    rep = scalarScanCount(pr)
    assert rep.total == 7
    assert all(residual(s.k, pr) <= 1e-10 for s in rep.solutions)


def test_grid_scan_small_alpha():
    rep = gridScanCount(make(alpha=0.05, p=1.0))
    assert rep.total == 3
    ks = _ks(rep)
    sym = [k for k in ks if abs(k[0] - k[1]) < 1e-6]
    assert len(sym) == 1
    asym = [k for k in ks if abs(k[0] - k[1]) >= 1e-6]
    assert asym[0] == asym[1][::-1]


def test_grid_scan_closed_forms():
    rep = gridScanCount(make(eta=[1, 2], alpha=3.0, p=2.0))
    assert rep.total == 1 and np.allclose(rep.solutions[0].k, [1 / 7, 2 / 7], atol=1e-10)
    rep = gridScanCount(make(alpha=0.5, p=1.0))
    assert any(np.allclose(s.k, [2 / 3, 2 / 3], atol=1e-10) for s in rep.solutions)


def test_grid_scan_cost_guard():
    with pytest.raises(DomainError) as ei:
        gridScanCount(make(n=4, alpha=0.02, p=1.0))
    assert ei.value.code == "COST_GUARD"


@pytest.mark.parametrize(
    "eta, alpha, p",
    [([1, 1], 0.05, 1.0), ([1, 1.5], 0.3, 1.0), ([1, 1], 2.0, 2.05), ([1, 1.3], 0.7, 2.4), ([0.8, 1], 3.0, 1.5)],
)
def test_grid_and_scalar_agree(eta, alpha, p):
    pr = make(eta=eta, alpha=alpha, p=p)
    g, s = gridScanCount(pr), scalarScanCount(pr)
    assert g.total == s.total == countSynchronized(pr).total
    for a, b in zip(_ks(g), _ks(s)):
        assert np.allclose(a, b, atol=1e-6)


def test_solution_set_symmetric_under_swap():
    rep = scalarScanCount(make(n=3, alpha=0.02, p=1.0))
    ks = {tuple(np.round(s.k, 7)) for s in rep.solutions}
    for k in ks:
        assert (k[1], k[0], k[2]) in ks and (k[2], k[1], k[0]) in ks


def test_oracle_independent_of_engine_tables(monkeypatch):
    # the oracle must not consult branch tables
    import critsync.branches as br

    def boom(*a, **k):
        raise AssertionError("oracle touched engine branch tables")

    monkeypatch.setattr(br, "buildTable", boom)
    monkeypatch.setattr(br, "buildTableFrom", boom)
    assert scalarScanCount(make(alpha=0.05, p=1.0)).total == 3
