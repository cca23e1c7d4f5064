"""Kernel backend selection.

Numba kernels are used when numba imports and ``CRITSYNC_DISABLE_NUMBA`` is
unset or "0".  Both backends stay importable for parity checks.
"""

from __future__ import annotations

import os

from . import _numpy

numpy_backend = _numpy

try:
    from . import _numba as numba_backend
except ImportError:  # numba is an optional extra
    numba_backend = None


def _disabled() -> bool:
    return os.environ.get("CRITSYNC_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


backend = numpy_backend if (numba_backend is None or _disabled()) else numba_backend
BACKEND_NAME = "numpy" if backend is numpy_backend else "numba"

monomial_eval = backend.monomial_eval
invert_monotone = backend.invert_monotone
grid_vertex_values = backend.grid_vertex_values
flag_cells = backend.flag_cells

__all__ = [
    "BACKEND_NAME",
    "backend",
    "numpy_backend",
    "numba_backend",
    "monomial_eval",
    "invert_monotone",
    "grid_vertex_values",
    "flag_cells",
]
