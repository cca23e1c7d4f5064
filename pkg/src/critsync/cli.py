"""Command-line entry point.

Exit status: 0 success, 1 invalid configuration, 2 numerical failure,
3 a verdict that predicts a count the engine does not reproduce.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import numpy as np

from . import boxes, conditions as cond, counting, oracle
from .branches import snap_alpha
from .bubble import BubbleSpec, syncProfile, write_profile_csv
from .errors import CritSyncError, DomainError, NumericalError, RegimeError, ValidationError
from .params import Regime, SystemParams, derive, validate

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 1, 2, 3


class _ConfigError(CritSyncError):
    code = "CONFIG"


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _dump(obj) -> str:
    return json.dumps(_json_safe(obj), indent=2) + "\n"


def _read_raw(path: str | None) -> dict:
    if not path:
        raise _ConfigError("--config is required", code="CONFIG")
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise _ConfigError(f"config file not found: {path}", code="CONFIG") from None
    except json.JSONDecodeError as e:
        raise _ConfigError(f"config is not valid JSON: {e}", code="CONFIG") from None
    if not isinstance(raw, dict):
        raise _ConfigError("config must be a JSON object", code="CONFIG")
    return raw


def _params(raw: dict) -> SystemParams:
    return validate({k: v for k, v in raw.items() if k in ("n", "N", "s", "eta", "alpha", "p", "q", "tol")})


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _with_params(report: dict, params: SystemParams) -> dict:
    # caller-order params plus the 1-based eta-ascending order used internally
    return {"params": params.to_dict(), "canonicalOrder": [i + 1 for i in params.perm], **report}


# ----------------------------------------------------------------- verify


def _expect(kind: str, value) -> dict:
    return {"kind": kind, "value": value}


def _constant_alpha(params):
    a = params.alpha_constant
    if a is None:
        raise RegimeError("condition needs a common coupling alpha", code="WRONG_REGIME")
    return a


def _require_p(params, test: Callable[[float], bool], what: str) -> float:
    p = params.p_constant
    if p is None or not test(p):
        raise RegimeError(f"condition needs {what}", code="WRONG_REGIME")
    return p


def _require_quadratic(params):
    if derive(params).regime is not Regime.QUADRATIC:
        raise RegimeError("condition needs p = 2", code="WRONG_REGIME")


def _v_thm21a(params, xi):
    a = boxes.alphaStar(params)
    amax = float(params.alpha[params.offdiag].max())
    return cond._verdict("thm2.1a", a - amax, params.tol.root, alphaStar=a, maxAlpha=amax), _expect("ge", 2**params.n - 1)


def _v_rem21(params, xi):
    a, g = boxes.alphaStarStar(params, return_gamma=True)
    amax = float(params.alpha[params.offdiag].max())
    return (cond._verdict("rem2.1", a - amax, params.tol.root, alphaStarStar=a, gamma=g, maxAlpha=amax),
            _expect("ge", 2**params.n - 1))


def _v_thm21b(params, xi):
    _require_p(params, lambda p: p < 2, "constant p < 2")
    rep = cond.inversePositivity(params.coupling_matrix, params.tol)
    inv = rep.inverse
    off = inv[~np.eye(params.n, dtype=bool)]
    slack = min(float(off.min()), float(rep.rowSums.min()))
    return cond._verdict("thm2.1b", slack, params.tol.root, inverse=inv, rowSums=rep.rowSums), _expect("ge", 1)


def _v_prop31(params, xi):
    _require_p(params, lambda p: p < 2, "constant p < 2")
    return cond.prop31Check(params.eta, _constant_alpha(params), params.tol), _expect("ge", 1)


def _v_prop32(kind):
    def run(params, xi):
        _require_p(params, lambda p: p < 2, "constant p < 2")
        d = params.to_dict()
        B = np.array(d["alpha"], float)
        np.fill_diagonal(B, d["eta"])
        return cond.templateCheck(B, kind, params.tol), _expect("ge", 1)

    return run


def _v_thm22a(params, xi):
    _require_p(params, lambda p: p < 2, "constant p < 2")
    _constant_alpha(params)
    return cond.Verdict("thm2.2a", True, math.inf, {}), _expect("ge", 1)


def _v_thm22b(params, xi):
    _require_p(params, lambda p: p < 2, "constant p < 2")
    a = _constant_alpha(params)
    return cond._verdict("thm2.2b", a - params.eta[-1], params.tol.root), _expect("eq", 1)


def _v_simple(fn, predicted):
    def run(params, xi):
        return fn(params), _expect(*predicted(params))

    return run


def _v_lem47(params, xi):
    return cond.cond4_10_11(params, xi=xi if xi is not None else 0.5), _expect("eq", 2**params.n - 1)


def _groups(params):
    eta = np.asarray(params.eta)
    n = params.n
    m = n // 2
    if n % 2 or not (np.allclose(eta[:m], eta[0], rtol=1e-14) and np.allclose(eta[m:], eta[m], rtol=1e-14)):
        raise RegimeError("needs n = 2m with two groups of equal eta", code="WRONG_REGIME")
    if len(set(params.s)) != 1:
        raise RegimeError("needs equal fractional orders", code="WRONG_REGIME")
    return m, float(eta[0]), float(eta[m])


def _v_thm22d(params, xi):
    _require_p(params, lambda p: p < 2, "constant p < 2")
    a = _constant_alpha(params)
    m, e1, e2 = _groups(params)
    v = cond.cond22d(m, e1, e2, a, params.tol)
    if v.holds and a > e2:
        pr = cond.pairOrderingFromCount(m, e1, e2, a, params.p_constant, params.N, params.s[0], params.tol)
        v.inputs["pairOrdering"] = pr.to_dict()
        if not pr.holds:
            v = cond.Verdict(v.conditionId, False, pr.slack, v.inputs)
    return v, _expect("eq", 1)


def _v_thm23a(params, xi):
    _require_quadratic(params)
    a = snap_alpha(_constant_alpha(params), params.eta, params.tol.exponent)
    e1, en = params.eta[0], params.eta[-1]
    if a == e1 == en:
        return cond.Verdict("thm2.3a", True, 0.0, {"case": "alpha = eta_1 = eta_n"}), _expect("eq", counting.INFINITE)
    slack = max(a - en, e1 - a)
    return cond._verdict("thm2.3a", slack, params.tol.root, case="alpha outside [eta_1, eta_n]"), _expect("eq", 1)


def _v_thm23b(params, xi):
    _require_quadratic(params)
    a = snap_alpha(_constant_alpha(params), params.eta, params.tol.exponent)
    e1, en = params.eta[0], params.eta[-1]
    if e1 == en:
        return cond.Verdict("thm2.3b", False, -math.inf, {"reason": "eta_1 = eta_n"}), _expect("eq", counting.NONE)
    v = cond._verdict("thm2.3b", min(a - e1, en - a), params.tol.root)
    return v, _expect("eq", counting.NONE)


def _v_thm23c(params, xi):
    _require_quadratic(params)
    a = _constant_alpha(params)
    return cond._verdict("thm2.3c", a - params.eta[-1], params.tol.root, strict=True), _expect("eq", 1)


def _v_thm24(params, xi):
    off = params.offdiag
    ok = bool(np.all(params.p[off] > 2.0))
    slack = float(np.min(params.p[off])) - 2.0
    return cond.Verdict("thm2.4", ok, slack, {}), _expect("ge", 1)


def _v_lem71(params, xi):
    _require_p(params, lambda p: p > 2, "constant p > 2")
    a = _constant_alpha(params)
    return cond._verdict("lem7.1", params.eta[0] - a, params.tol.root), _expect("eq", 1)


def _v_thm25a(params, xi):
    _require_p(params, lambda p: p > 2, "constant p > 2")
    a = _constant_alpha(params)
    if a <= params.eta[0]:
        v = cond._verdict("thm2.5a", params.eta[0] - a, params.tol.root, case="alpha <= eta_1")
        return v, _expect("eq", 1)
    v = cond.delta0Check(params)
    return v, _expect("eq", 1)


def _v_thm25b(params, xi):
    _require_p(params, lambda p: p > 2, "constant p > 2")
    a = _constant_alpha(params)
    j = int(np.sum(params.eta < a))
    v = cond.Verdict("thm2.5b", j >= 1, float(a - params.eta[0]),
                     {"j": j, "lowerBoundNearTwo": 2**j - 1, "note": "count bound applies for p close enough to 2"})
    return v, None


def _v_lem74(params, xi):
    t = cond.lemma74Ratio(params, xi=xi if xi is not None else 0.5)
    v = t.verdict
    v.inputs["rows"] = t.rows
    return v, None


def _n_pow(params):
    return ("eq", 2**params.n - 1)


CONDITIONS: dict[str, Callable] = {
    "thm2.1a": _v_thm21a,
    "rem2.1": _v_rem21,
    "thm2.1b": _v_thm21b,
    "prop3.1": _v_prop31,
    "prop3.2a": _v_prop32("a"),
    "prop3.2b": _v_prop32("b"),
    "prop3.2c": _v_prop32("c"),
    "thm2.2a": _v_thm22a,
    "thm2.2b": _v_thm22b,
    "lem4.3": _v_thm22b,
    "lem4.5": _v_simple(cond.cond46, lambda p: ("eq", 1)),
    "lem4.6": _v_simple(cond.cond49, lambda p: ("ge", 2**p.n - 1)),
    "lem4.7": _v_lem47,
    "thm2.2c": _v_lem47,
    "lem4.8": _v_simple(cond.cond4_12_13, _n_pow),
    "thm2.2d": _v_thm22d,
    "thm2.3a": _v_thm23a,
    "thm2.3b": _v_thm23b,
    "thm2.3c": _v_thm23c,
    "thm2.4": _v_thm24,
    "thm2.5a": _v_thm25a,
    "lem7.1": _v_lem71,
    "thm2.5b": _v_thm25b,
    "thm2.5c": _v_simple(cond.cond25c, lambda p: ("eq", 1)),
    "lem7.3": lambda params, xi: (cond.lemma73Bounds(params), None),
    "lem7.4": _v_lem74,
}


def _meets(expect: dict, rep: counting.CountReport) -> bool:
    total, want = rep.total, expect["value"]
    if expect["kind"] == "eq":
        if rep.lowerBound:
            return True  # an existence-only report cannot refute an exact count
        return total == want
    if isinstance(total, str):
        return total == counting.INFINITE
    return total >= want


def run_verify(params: SystemParams, condition: str, xi: float | None) -> tuple[dict, int]:
    if condition not in CONDITIONS:
        raise _ConfigError(f"unknown condition {condition!r}; known: {sorted(CONDITIONS)}", code="CONFIG")
    verdict, expect = CONDITIONS[condition](params, xi)
    out: dict[str, Any] = {"verdict": verdict.to_dict()}
    status = EXIT_OK
    if expect is not None:
        rep = counting.countSynchronized(params)
        out["prediction"] = expect
        out["count"] = {"total": rep.total, "rhoStar": rep.rhoStar, "rhoStarStar": rep.rhoStarStar,
                        "lowerBound": rep.lowerBound, "method": rep.method}
        ok = _meets(expect, rep)
        out["consistent"] = ok if verdict.holds else None
        if verdict.holds and not ok:
            status = EXIT_MISMATCH
    return out, status


# ------------------------------------------------------------------ sweep


def _apply(raw: dict, param: str, value: float) -> dict:
    raw = dict(raw)
    if param in ("alpha", "p"):
        raw[param] = value
        if param == "p":
            raw.pop("q", None)
    elif param.startswith("eta"):
        idx = param[3:]
        eta = list(np.broadcast_to(np.asarray(raw["eta"], float), (int(raw["n"]),)))
        if idx:
            i = int(idx) - 1
            if not 0 <= i < len(eta):
                raise _ConfigError(f"no such index in {param}", code="CONFIG")
            eta[i] = value
        else:
            eta = [value] * len(eta)
        raw["eta"] = eta
    else:
        raise _ConfigError(f"cannot sweep {param!r}; use alpha, p, eta or eta<i>", code="CONFIG")
    return raw


def _sweep_point(args) -> tuple:
    raw, param, value = args
    try:
        rep = counting.countSynchronized(_params(_apply(raw, param, value)))
    except CritSyncError as e:
        return value, None, e.to_dict()
    return value, (rep.rhoStar, rep.rhoStarStar, rep.total), None


def _total_cell(total) -> str:
    if total == counting.INFINITE:
        return "inf"
    if total == counting.NONE:
        return "0"
    return str(int(total))


def run_sweep(raw: dict, param: str, lo: float, hi: float, steps: int, workers: int | None = None) -> str:
    if not lo < hi:
        raise _ConfigError("--from must be below --to", code="CONFIG")
    if steps < 2:
        raise _ConfigError("--steps must be at least 2", code="CONFIG")
    _params(_apply(raw, param, lo))  # fail fast on a bad config
    values = [float(v) for v in np.linspace(lo, hi, steps)]
    jobs = [(raw, param, v) for v in values]
    if workers == 1 or steps < 8:
        results = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_sweep_point, jobs, chunksize=max(1, steps // 64)))
    buf = io.StringIO()
    buf.write("value,rho_star,rho_star_star,total\n")
    for value, row, err in results:
        if err is not None:
            raise NumericalError(f"sweep point {value!r} failed: {err['message']}", code=err["error"], value=value)
        rs, rss, total = row
        buf.write(f"{value!r},{rs},{rss},{_total_cell(total)}\n")
    return buf.getvalue()


# ----------------------------------------------------------------- bubble


def run_bubble(raw: dict, params: SystemParams, lo: float | None, hi: float | None, steps: int | None) -> str:
    if "k" in raw:
        k = np.asarray(raw["k"], float)
    else:
        rep = counting.countSynchronized(params)
        if not rep.solutions:
            raise NumericalError("no synchronized solution to profile", code="NO_SOLUTION")
        k = rep.solutions[0].k
    if "radii" in raw:
        radii = np.asarray(raw["radii"], float)
    else:
        lo = 0.0 if lo is None else lo
        hi = 10.0 if hi is None else hi
        steps = 101 if steps is None else steps
        if not lo < hi or steps < 2:
            raise _ConfigError("radius range needs --from < --to and --steps >= 2", code="CONFIG")
        radii = np.linspace(lo, hi, steps)
    spec = BubbleSpec(params.N, params.s_max)
    table = syncProfile(k, spec, radii)
    buf = io.StringIO()
    write_profile_csv(buf, radii, table)
    return buf.getvalue()


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critsync", description="Count and verify synchronized solutions.")
    ap.add_argument("verb", choices=["count", "solve", "verify", "sweep", "oracle", "bubble"])
    ap.add_argument("--config", help="JSON problem description")
    ap.add_argument("--condition", help="condition id for verify")
    ap.add_argument("--param", help="swept parameter: alpha, p, eta or eta<i>")
    ap.add_argument("--from", dest="lo", type=float, help="sweep or radius range start")
    ap.add_argument("--to", dest="hi", type=float, help="sweep or radius range end")
    ap.add_argument("--steps", type=int, help="number of sweep points or radii")
    ap.add_argument("--out", help="write the result here instead of standard output")
    ap.add_argument("--grid", type=int, help="grid points per axis for the oracle grid scan")
    ap.add_argument("--xi", type=float, help="split parameter in (0, 1) for conditions that take one")
    return ap


def _exit_code(err: Exception) -> int:
    if isinstance(err, (ValidationError, RegimeError, _ConfigError)):
        return EXIT_CONFIG
    return EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = _read_raw(args.config)
        params = _params(raw)
        if args.verb in ("count", "solve"):
            rep = counting.countSynchronized(params)
            if args.verb == "count":
                text = _dump(_with_params(rep.to_dict(), params))
            else:
                sols = [{"k": s.k, "residual": s.residual, "assignment": list(s.assignment)} for s in rep.solutions]
                text = _dump(_with_params({"total": rep.total, "solutions": sols}, params))
            _emit(text, args.out)
            return EXIT_OK
        if args.verb == "verify":
            if not args.condition:
                raise _ConfigError("verify needs --condition", code="CONFIG")
            out, status = run_verify(params, args.condition, args.xi)
            _emit(_dump(_with_params(out, params)), args.out)
            return status
        if args.verb == "sweep":
            if not args.param or args.lo is None or args.hi is None or args.steps is None:
                raise _ConfigError("sweep needs --param, --from, --to and --steps", code="CONFIG")
            _emit(run_sweep(raw, args.param, args.lo, args.hi, args.steps), args.out)
            return EXIT_OK
        if args.verb == "oracle":
            exps = derive(params)
            scalar_ok = args.grid is None and exps.regime in (Regime.SUBQUADRATIC, Regime.SUPERQUADRATIC) \
                and params.alpha_constant is not None
            if scalar_ok:
                rep = oracle.scalarScanCount(params, exps)
            else:
                rep = oracle.gridScanCount(params, oracle.ScanConfig(gridPerAxis=args.grid))
            _emit(_dump(_with_params(rep.to_dict(), params)), args.out)
            return EXIT_OK
        _emit(run_bubble(raw, params, args.lo, args.hi, args.steps), args.out)
        return EXIT_OK
    except (CritSyncError, DomainError) as e:
        sys.stderr.write(_dump(e.to_dict()))
        return _exit_code(e)
    except OSError as e:
        sys.stderr.write(_dump({"error": "IO", "message": str(e)}))
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
