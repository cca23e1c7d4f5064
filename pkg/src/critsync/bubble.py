"""Radial bubble profile and synchronized profiles k_i * U."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class BubbleSpec:
    N: int
    s: float

    def __post_init__(self):
        if not 0 < self.s < 1 or not self.N > 2 * self.s:
            raise ValidationError("need 0 < s < 1 and N > 2s", code="REJECT_DIMENSION")

    @property
    def decay(self) -> float:
        """Exponent N - 2s of the far-field decay."""
        return self.N - 2.0 * self.s

    @property
    def peak(self) -> float:
        d = self.decay
        return (self.N * d) ** (d / (4.0 * self.s))


def bubbleValue(spec: BubbleSpec, r):
    """U(r) = peak / (1 + r^2)^((N-2s)/2).  Accepts scalars or arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValidationError("radius must be nonnegative", code="NEGATIVE_RADIUS")
    # log1p keeps the tail accurate for large r
    out = spec.peak * np.exp(-0.5 * spec.decay * np.log1p(r * r))
    return float(out) if out.ndim == 0 else out


def syncProfile(k, spec: BubbleSpec, radii: Iterable[float]) -> np.ndarray:
    """Columns u_i(r) = k_i U(r), shape (len(radii), n)."""
    k = np.asarray(k, dtype=float)
    if np.any(~(k > 0)):
        raise ValidationError("k_i must be positive", code="NONPOSITIVE_K")
    u = np.atleast_1d(bubbleValue(spec, np.asarray(list(radii), dtype=float)))
    return np.outer(u, k)


def write_profile_csv(fh: TextIO, radii, table: np.ndarray) -> None:
    n = table.shape[1]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r"] + [f"u{i + 1}" for i in range(n)])
    for r, row in zip(radii, table):
        w.writerow([repr(float(r))] + [repr(float(x)) for x in row])


def far_field_ratio(spec: BubbleSpec, r: float) -> float:
    """U(r) r^(N-2s) / peak, which tends to 1."""
    return bubbleValue(spec, r) * math.exp(spec.decay * math.log(r)) / spec.peak
