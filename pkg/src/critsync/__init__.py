"""Counting and certifying synchronized solutions of critical coupled systems.

The coefficient vector k of a synchronized solution u_i = k_i U solves an
algebraic system whose exponents are fixed by the critical Sobolev exponent.
This package validates problem data, counts positive solutions exactly where
a scalar reduction exists, certifies existence boxes elsewhere and checks
the associated sufficient conditions.
"""

from ._accel import BACKEND_NAME
from .boxes import (
    Box,
    SignCertificate,
    alphaStar,
    alphaStarStar,
    evalF,
    evalG,
    gBox,
    jacobianF,
    mirandaCertify,
    smallAlphaBoxes,
    solveInBox,
    superquadraticBox,
)
from .branches import BranchTable, buildTable, hInverse, kInverse, peak
from .bubble import BubbleSpec, bubbleValue, syncProfile
from .conditions import (
    InversePositivityReport,
    Verdict,
    aStarEntries,
    cond4_10_11,
    cond4_12_13,
    cond22d,
    cond25c,
    cond46,
    cond49,
    delta0Check,
    deltaN,
    inversePositivity,
    lemma73Bounds,
    lemma74Ratio,
    templateCheck,
)
from .counting import (
    INFINITE,
    NONE,
    CountReport,
    Solution,
    closedFormP2,
    countAlphaLarge,
    countSubsets,
    countSynchronized,
    gSubset,
)
from .errors import CritSyncError, DomainError, NumericalError, RegimeError, ValidationError
from .oracle import ScanConfig, gridScanCount, residual, scalarScanCount
from .params import DerivedExponents, Regime, SystemParams, Tolerances, derive, load_config, validate

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
