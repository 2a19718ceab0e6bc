from __future__ import annotations

from typing import Dict, Optional


class DynmixError(Exception):
    """Base error for fitting, simulation and CLI failures."""

    code = "DYNMIX_ERROR"
    exit_code = 1

    def __init__(self, message: str, *, code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code

    def to_dict(self) -> Dict[str, Dict[str, str]]:
        return {"error": {"code": self.code, "message": self.message}}


class UsageError(DynmixError, ValueError):
    """Raised for invalid flags or arguments outside an operation's domain."""

    code = "USAGE"
    exit_code = 2


class DataError(DynmixError, ValueError):
    """Raised when observations or stored draws are malformed."""

    code = "DATA"
    exit_code = 3


class InvalidDimensionError(DataError):
    """Raised when a vector or matrix has the wrong length or shape."""

    code = "INVALID_DIMENSION"


class InvalidIndexError(DynmixError, IndexError):
    """Raised when a block or time index is out of range."""

    code = "INVALID_INDEX"
    exit_code = 2


class SamplerNumericError(DynmixError, ArithmeticError):
    """Raised when a conditional draw produces or meets non-finite numbers."""

    code = "NUMERIC"
    exit_code = 4

    def __init__(
        self,
        message: str,
        *,
        iteration: Optional[int] = None,
        conditional: Optional[str] = None,
        code: Optional[str] = None,
    ):
        if iteration is not None:
            message = f"iteration {iteration}, conditional '{conditional}': {message}"
        super().__init__(message, code=code)
        self.iteration = iteration
        self.conditional = conditional


class NotPositiveDefiniteError(SamplerNumericError):
    """Raised by the banded Cholesky when a pivot is not strictly positive."""

    code = "NOT_POSITIVE_DEFINITE"

    def __init__(self, index: int):
        super().__init__(f"matrix is not positive definite (pivot {index})")
        self.index = index


class ConfigurationError(DynmixError, ValueError):
    """Raised for invalid or mutually incompatible fit settings."""

    code = "CONFIG"
    exit_code = 5
