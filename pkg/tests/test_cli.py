import csv
import io
import json
import subprocess
import sys

import pytest

from critsync.cli import main


def _cfg(tmp_path, name="c.json", **raw):
    base = {"n": 2, "N": 3, "s": 0.5, "eta": [1, 1], "alpha": 0.05, "p": 1}
    base.update(raw)
    path = tmp_path / name
    path.write_text(json.dumps(base))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_count(tmp_path, capsys):
    code, out, _ = _run(capsys, "count", "--config", _cfg(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["total"] == 3
    assert rep["params"]["eta"] == [1.0, 1.0] and rep["canonicalOrder"] == [1, 2]


def test_count_reports_caller_order(tmp_path, capsys):
    code, out, _ = _run(capsys, "solve", "--config", _cfg(tmp_path, eta=[2, 1], alpha=3, p=2))
    rep = json.loads(out)
    assert code == 0 and rep["canonicalOrder"] == [2, 1]
    assert rep["solutions"][0]["k"] == pytest.approx([2 / 7, 1 / 7])
    assert rep["solutions"][0]["residual"] <= 1e-12


def test_verify_gap_holds(tmp_path, capsys):
    code, out, _ = _run(capsys, "verify", "--config", _cfg(tmp_path, eta=[1, 2], alpha=1.5, p=2),
                        "--condition", "thm2.3b")
    rep = json.loads(out)
    assert code == 0 and rep["verdict"]["holds"] and rep["count"]["total"] == "NONE"


def test_verify_with_xi(tmp_path, capsys):
    code, out, _ = _run(capsys, "verify", "--config", _cfg(tmp_path), "--condition", "thm2.2c", "--xi", "0.5")
    assert code == 0 and json.loads(out)["verdict"]["holds"]


def test_verify_unknown_condition(tmp_path, capsys):
    code, _, err = _run(capsys, "verify", "--config", _cfg(tmp_path), "--condition", "nope")
    assert code == 1 and "error" in json.loads(err)


def test_sweep_steps_from_three_to_one(tmp_path, capsys):
    out_path = tmp_path / "sweep.csv"
    code, _, _ = _run(capsys, "sweep", "--config", _cfg(tmp_path), "--param", "alpha",
                      "--from", "0.01", "--to", "3", "--steps", "40", "--out", str(out_path))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_path.read_text())))
    assert list(rows[0]) == ["value", "rho_star", "rho_star_star", "total"]
    totals = [r["total"] for r in rows]
    assert totals[0] == "3" and totals[-1] == "1"
    flips = sum(a != b for a, b in zip(totals, totals[1:]))
    assert flips == 1
    assert float(rows[0]["value"]) == 0.01 and float(rows[-1]["value"]) == 3.0


def test_sweep_encodes_none_and_inf(tmp_path, capsys):
    code, out, _ = _run(capsys, "sweep", "--config", _cfg(tmp_path, eta=[1, 1], alpha=1, p=2),
                        "--param", "alpha", "--from", "0.5", "--to", "1.5", "--steps", "3")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["total"] for r in rows] == ["1", "inf", "1"]
    code, out, _ = _run(capsys, "sweep", "--config", _cfg(tmp_path, eta=[1, 2], alpha=1.5, p=2),
                        "--param", "alpha", "--from", "1.2", "--to", "1.8", "--steps", "2")
    assert [r["total"] for r in csv.DictReader(io.StringIO(out))] == ["0", "0"]


def test_sweep_rejects_bad_range(tmp_path, capsys):
    code, _, err = _run(capsys, "sweep", "--config", _cfg(tmp_path), "--param", "alpha",
                        "--from", "2", "--to", "1", "--steps", "5")
    assert code == 1 and json.loads(err)["error"]


def test_sweep_is_deterministic(tmp_path, capsys):
    args = ["sweep", "--config", _cfg(tmp_path), "--param", "p", "--from", "0.5", "--to", "1.5", "--steps", "9"]
    _, a, _ = _run(capsys, *args)
    _, b, _ = _run(capsys, *args)
    assert a == b


def test_oracle_verb(tmp_path, capsys):
    code, out, _ = _run(capsys, "oracle", "--config", _cfg(tmp_path))
    assert code == 0 and json.loads(out)["total"] == 3
    code, out, _ = _run(capsys, "oracle", "--config", _cfg(tmp_path), "--grid", "200")
    assert code == 0 and json.loads(out)["total"] == 3


def test_bubble_verb(tmp_path, capsys):
    code, out, _ = _run(capsys, "bubble", "--config", _cfg(tmp_path, eta=[1, 2], alpha=3, p=2),
                        "--from", "0", "--to", "1", "--steps", "2")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["r", "u1", "u2"]
    assert [float(x) for x in rows[1]] == pytest.approx([0.0, 6 / 7, 12 / 7])
    assert [float(x) for x in rows[2]] == pytest.approx([1.0, 3 / 7, 6 / 7])


def test_invalid_config_exit_one(tmp_path, capsys):
    code, _, err = _run(capsys, "count", "--config", _cfg(tmp_path, N=1))
    assert code == 1 and json.loads(err)["error"] == "REJECT_DIMENSION"
    code, _, err = _run(capsys, "count", "--config", str(tmp_path / "missing.json"))
    assert code == 1 and json.loads(err)["error"]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "critsync", "count", "--config", _cfg(tmp_path)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["total"] == 3


def test_verify_mismatch_exit_three(tmp_path, capsys, monkeypatch):
    from critsync import counting

    real = counting.countSynchronized

    def wrong(params):
        rep = real(params)
        rep.total = 2
        return rep

    monkeypatch.setattr(counting, "countSynchronized", wrong)
    code, out, _ = _run(capsys, "verify", "--config", _cfg(tmp_path, alpha=2, p=2.7), "--condition", "thm2.5c")
    assert code == 3 and json.loads(out)["verdict"]["holds"]


def test_numeric_failure_exit_two(tmp_path, capsys, monkeypatch):
    from critsync import counting
    from critsync.errors import NumericalError

    def fail(params):
        raise NumericalError("stalled", code="NO_CONVERGENCE")

    monkeypatch.setattr(counting, "countSynchronized", fail)
    code, _, err = _run(capsys, "count", "--config", _cfg(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "NO_CONVERGENCE"
