"""Exception types.

Every error carries a short machine-readable ``code`` (``REJECT_SIGN``,
``WRONG_REGIME``, ...) so the command line can emit it as structured JSON.
"""

from __future__ import annotations


class CritSyncError(Exception):
    code = "ERROR"

    def __init__(self, message: str, code: str | None = None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = self.details
        return out


class ValidationError(CritSyncError, ValueError):
    """Raw problem data violates the standing assumptions."""

    code = "INVALID"


class RegimeError(CritSyncError):
    """Operation called outside the exponent/coupling regime it is defined for."""

    code = "WRONG_REGIME"


class DomainError(CritSyncError, ValueError):
    """Argument outside the domain of a scalar map or branch inverse."""

    code = "OUT_OF_DOMAIN"


class NumericalError(CritSyncError, ArithmeticError):
    """Iterative procedure failed (no convergence, unstable grid, singular matrix)."""

    code = "NUMERIC"
