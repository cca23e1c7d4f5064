from __future__ import annotations

import pytest

from critsync.params import validate


def make(n=2, eta=None, alpha=0.5, p=1.0, N=3, s=0.5, **extra):
    raw = {"n": n, "N": N, "s": s, "eta": [1.0] * n if eta is None else list(eta), "alpha": alpha, "p": p}
    raw.update(extra)
    return validate(raw)


@pytest.fixture
def mk():
    return make


# --- acceptance reporting ----------------------------------------------------
# Tests marked @pytest.mark.criterion(k, "label") get one summary line each.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, label = mark.args
    entry = _CRITERIA.setdefault(num, {"label": label, "ok": True, "ran": False})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry["ran"] = True
        if rep.failed or (rep.skipped and rep.when == "setup"):
            entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {e['label']}")
