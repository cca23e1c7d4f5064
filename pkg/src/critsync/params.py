"""Problem data: validation, canonical ordering and derived exponents."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ValidationError

__all__ = [
    "Tolerances",
    "SystemParams",
    "Regime",
    "DerivedExponents",
    "validate",
    "derive",
    "load_config",
    "close",
]


@dataclass(frozen=True)
class Tolerances:
    exponent: float = 1e-10
    root: float = 1e-11
    boundary: float = 1e-9
    dedupe: float = 1e-7
    gridMin: int = 32

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValidationError(f"tolerance {f.name} must be positive", code="REJECT_TOL")
        if self.root > self.boundary:
            raise ValidationError("tol.root must not exceed tol.boundary", code="REJECT_TOL")

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any] | None) -> "Tolerances":
        if not raw:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown tolerance keys {sorted(unknown)}", code="REJECT_TOL")
        kw = {k: (int(v) if k == "gridMin" else float(v)) for k, v in raw.items()}
        return cls(**kw)


def close(a: float, b: float, rel: float) -> bool:
    """Relative comparison used for exponents and alpha/eta snapping."""
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SystemParams:
    """Validated problem data in canonical order (eta ascending).

    ``perm[c]`` is the caller's index of canonical equation ``c``.  Matrices
    carry zeros on the diagonal; the self-coupling lives in ``eta``.
    """

    n: int
    N: int
    s: tuple[float, ...]
    eta: np.ndarray
    alpha: np.ndarray
    p: np.ndarray
    q: np.ndarray
    tol: Tolerances = field(default_factory=Tolerances)
    perm: tuple[int, ...] = ()

    @property
    def s_max(self) -> float:
        return max(self.s)

    @property
    def offdiag(self) -> np.ndarray:
        return ~np.eye(self.n, dtype=bool)

    def _constant(self, m: np.ndarray) -> float | None:
        vals = m[self.offdiag]
        ref = float(vals.mean())
        if all(close(float(v), ref, self.tol.exponent) for v in vals):
            return ref
        return None

    @property
    def alpha_constant(self) -> float | None:
        """Common off-diagonal coupling, or None when the couplings differ."""
        return self._constant(self.alpha)

    @property
    def p_constant(self) -> float | None:
        return self._constant(self.p)

    @property
    def coupling_matrix(self) -> np.ndarray:
        """B = (alpha_ij) with eta on the diagonal."""
        B = np.array(self.alpha)
        np.fill_diagonal(B, self.eta)
        return B

    def to_original(self, vec) -> np.ndarray:
        """Map a canonical-order vector back to the caller's index order."""
        vec = np.asarray(vec, dtype=float)
        out = np.empty_like(vec)
        out[list(self.perm)] = vec
        return out

    def to_canonical(self, vec) -> np.ndarray:
        return np.asarray(vec, dtype=float)[list(self.perm)]

    def to_dict(self, original_order: bool = True) -> dict:
        if original_order:
            inv = np.argsort(self.perm)
            eta = self.eta[inv]
            mats = [m[np.ix_(inv, inv)] for m in (self.alpha, self.p, self.q)]
            s = [self.s[i] for i in inv]
        else:
            eta, mats, s = self.eta, [self.alpha, self.p, self.q], list(self.s)
        return {
            "n": self.n,
            "N": self.N,
            "s": list(s),
            "eta": eta.tolist(),
            "alpha": mats[0].tolist(),
            "p": mats[1].tolist(),
            "q": mats[2].tolist(),
            "tol": {f.name: getattr(self.tol, f.name) for f in fields(self.tol)},
        }

    def updated(self, **changes) -> "SystemParams":
        """Re-validate with some raw keys replaced (caller index order).

        Setting ``p`` without ``q`` recomputes ``q = 2_s^* - p``.
        """
        raw = self.to_dict()
        if "p" in changes and "q" not in changes:
            raw.pop("q")
        raw.update(changes)
        return validate(raw)

    def __eq__(self, other):
        if not isinstance(other, SystemParams):
            return NotImplemented
        return (
            self.n == other.n
            and self.N == other.N
            and self.s == other.s
            and self.tol == other.tol
            and self.perm == other.perm
            and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("eta", "alpha", "p", "q"))
        )

    __hash__ = None


class Regime(str, enum.Enum):
    SUBQUADRATIC = "SUBQUADRATIC"
    QUADRATIC = "QUADRATIC"
    SUPERQUADRATIC = "SUPERQUADRATIC"
    MIXED = "MIXED"


@dataclass(frozen=True)
class DerivedExponents:
    twoStar: float
    beta: float
    qCommon: float | None
    kappa: float | None
    regime: Regime
    p: float | None = None

    @property
    def constant(self) -> bool:
        return self.regime is not Regime.MIXED


def _matrix(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full((n, n), float(arr))
    if arr.shape != (n, n):
        raise ValidationError(f"{name} must be a scalar or an {n}x{n} matrix", code="REJECT_SHAPE")
    arr = arr.copy()
    np.fill_diagonal(arr, 0.0)
    return arr


def _vector(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValidationError(f"{name} must be a scalar or a length-{n} list", code="REJECT_SHAPE")
    return arr


def critical_exponent(N: float, s: float) -> float:
    return 2.0 * N / (N - 2.0 * s)


def validate(raw: Mapping[str, Any] | SystemParams) -> SystemParams:
    """Check the standing assumptions and return canonical ``SystemParams``.

    ``raw`` needs ``n``, ``N``, ``s``, ``eta``, ``alpha`` and ``p``; ``q`` and
    ``tol`` are optional (``q`` defaults to ``2_s^* - p``).  Scalars broadcast.
    """
    if isinstance(raw, SystemParams):
        raw = raw.to_dict()
    missing = [k for k in ("n", "N", "s", "eta", "alpha", "p") if k not in raw]
    if missing:
        raise ValidationError(f"missing keys {missing}", code="REJECT_MISSING")
    n = int(raw["n"])
    N = int(raw["N"])
    if n < 2:
        raise ValidationError("need at least two equations", code="REJECT_DIMENSION")
    tol = raw["tol"] if isinstance(raw.get("tol"), Tolerances) else Tolerances.from_mapping(raw.get("tol"))

    s = _vector(raw["s"], n, "s")
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValidationError("fractional orders must lie in (0, 1)", code="REJECT_DIMENSION")
    smax = float(s.max())
    if not N > 2 * smax:
        raise ValidationError(f"need N > 2 max s_i (N={N}, 2s={2 * smax})", code="REJECT_DIMENSION")
    two_star = critical_exponent(N, smax)

    eta = _vector(raw["eta"], n, "eta")
    if np.any(~np.isfinite(eta)) or np.any(eta <= 0):
        raise ValidationError("eta_i must be positive", code="REJECT_SIGN")
    alpha = _matrix(raw["alpha"], n, "alpha")
    off = ~np.eye(n, dtype=bool)
    if np.any(~np.isfinite(alpha[off])) or np.any(alpha[off] <= 0):
        raise ValidationError("alpha_ij must be positive for i != j", code="REJECT_SIGN")

    p = _matrix(raw["p"], n, "p")
    if raw.get("q") is None:
        q = _matrix(two_star - p, n, "q")
    else:
        q = _matrix(raw["q"], n, "q")
    for i, j in zip(*np.nonzero(off)):
        if not close(p[i, j] + q[i, j], two_star, tol.exponent):
            raise ValidationError(
                f"p_{i + 1}{j + 1} + q_{i + 1}{j + 1} = {p[i, j] + q[i, j]} != 2_s^* = {two_star}",
                code="REJECT_EXPONENT",
            )
        if not q[i, j] > 0:
            raise ValidationError("need p_ij < 2_s^*", code="REJECT_EXPONENT")

    order = np.argsort(eta, kind="stable")
    ix = np.ix_(order, order)
    return SystemParams(
        n=n,
        N=N,
        s=tuple(float(x) for x in s[order]),
        eta=_frozen(eta[order]),
        alpha=_frozen(alpha[ix]),
        p=_frozen(p[ix]),
        q=_frozen(q[ix]),
        tol=tol,
        perm=tuple(int(i) for i in order),
    )


def derive(params: SystemParams) -> DerivedExponents:
    """Critical exponent, beta, kappa and regime tag.

    Exponent formulas use the largest fractional order.  A non-constant
    ``p_ij`` yields ``Regime.MIXED`` with ``qCommon``/``kappa`` unset.
    """
    smax = params.s_max
    two_star = critical_exponent(params.N, smax)
    beta = (params.N - 2 * smax) / (4 * smax)
    p = params.p_constant
    if p is None:
        return DerivedExponents(two_star, beta, None, None, Regime.MIXED)
    if close(p, 2.0, params.tol.exponent):
        return DerivedExponents(two_star, beta, two_star - 2.0, 0.0, Regime.QUADRATIC, 2.0)
    q = two_star - p
    kappa = (2.0 - p) / q
    regime = Regime.SUBQUADRATIC if p < 2 else Regime.SUPERQUADRATIC
    return DerivedExponents(two_star, beta, q, kappa, regime, p)


def load_config(path: str | Path) -> SystemParams:
    with open(path) as fh:
        raw = json.load(fh)
    return validate(raw)
