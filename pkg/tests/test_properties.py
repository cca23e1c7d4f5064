"""Randomised invariants (hypothesis)."""

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from critsync import conditions as C
from critsync.boxes import evalF
from critsync.branches import buildTableFrom
from critsync.bubble import BubbleSpec, bubbleValue
from critsync.counting import countSynchronized
from critsync.params import validate

SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

etas = st.lists(st.floats(0.3, 3.0), min_size=2, max_size=4)


@SETTINGS
@given(N=st.integers(1, 6), s=st.floats(0.05, 0.95), r=st.floats(0.0, 1e3))
def test_bubble_positive_and_bounded(N, s, r):
    assume(N > 2 * s)
    spec = BubbleSpec(N, s)
    u = bubbleValue(spec, r)
    assert 0 < u <= spec.peak


@SETTINGS
@given(eta=etas, alpha=st.floats(0.05, 4.0), p=st.floats(0.2, 2.9))
def test_validate_round_trip(eta, alpha, p):
    raw = {"n": len(eta), "N": 3, "s": 0.5, "eta": eta, "alpha": alpha, "p": p}
    pr = validate(raw)
    assert np.all(np.diff(pr.eta) >= 0)
    assert pr.to_dict()["eta"] == pytest.approx(eta)
    assert validate(pr.to_dict()) == pr


@SETTINGS
@given(eta=etas, alpha=st.floats(0.05, 4.0), kappa=st.floats(-3.0, 0.9), u=st.floats(0.01, 0.99))
def test_branch_inverse_round_trip(eta, alpha, kappa, u):
    assume(abs(kappa) > 0.05)
    eta = sorted(eta)
    assume(min(abs(alpha - e) for e in eta) > 1e-3)
    tab = buildTableFrom(eta, alpha, kappa)
    lo, hi, _, _ = tab.h_domain()
    if np.isfinite(hi) and lo == 0:
        tau = u * hi
    elif np.isfinite(hi):
        tau = lo + u * (hi - lo)
    else:
        tau = (lo if lo > 0 else 1.0) * (1.0 + 10 * u)
    t = tab.h_all(np.array(tau))
    vals = t**kappa + (alpha - np.asarray(eta)) * t
    assert np.allclose(vals, tau, rtol=1e-10)


@SETTINGS
@given(eta=etas, alpha=st.floats(0.05, 4.0))
def test_closed_form_inverse_matches_numeric(eta, alpha):
    assume(min(abs(alpha - e) for e in eta) > 1e-2)
    n = len(eta)
    B = np.full((n, n), alpha)
    np.fill_diagonal(B, eta)
    assume(abs(np.linalg.det(B)) > 1e-6)
    assert C.deltaN(eta, alpha) == pytest.approx(np.linalg.det(B), rel=1e-9, abs=1e-12)
    assert np.allclose(C.aStarEntries(eta, alpha), np.linalg.inv(B), rtol=1e-8, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(eta=st.lists(st.floats(0.5, 2.0), min_size=2, max_size=3), alpha=st.floats(0.01, 5.0),
       p=st.sampled_from([0.5, 1.0, 1.5, 2.0, 2.2, 2.6]))
def test_every_reported_solution_solves_the_system(eta, alpha, p):
    pr = validate({"n": len(eta), "N": 3, "s": 0.5, "eta": eta, "alpha": alpha, "p": p})
    rep = countSynchronized(pr)
    for sol in rep.solutions:
        assert np.all(sol.k > 0)
        assert np.max(np.abs(evalF(sol.k, pr))) <= 1e-10
