"""Structured error types.

Every failure raised by the library carries a machine-readable payload so the
CLI can map it onto an exit code and serialize it into the run report.
"""
from __future__ import annotations

from typing import Any


class LichnerowiczError(Exception):
    """Base class for all library errors."""

    kind = "error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "message": self.message}
        out.update(_jsonable(self.details))
        return out


class InvalidArgument(LichnerowiczError, ValueError):
    kind = "invalid-argument"


class DomainError(LichnerowiczError, ValueError):
    """A field value outside the admissible range, e.g. a nonpositive u."""

    kind = "domain-error"


class NumericError(LichnerowiczError, ArithmeticError):
    kind = "numeric-error"


class HypothesisFailure(LichnerowiczError):
    """A structural hypothesis of the existence theory does not hold."""

    kind = "hypothesis-failure"


class ConstructionFailure(LichnerowiczError):
    """A barrier could not be certified."""

    kind = "construction-failure"


class SchemeFailure(LichnerowiczError):
    """The monotone iteration broke its ordering chain."""

    kind = "scheme-failure"


class NonConvergence(LichnerowiczError):
    kind = "nonconvergence"


def _jsonable(obj: Any) -> Any:
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
