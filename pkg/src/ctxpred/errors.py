"""Exception types shared across the package.

Every failure mode that callers are expected to distinguish gets its own
class; the CLI maps them onto process exit codes (see cli.EXIT_CODES).
"""

from __future__ import annotations


class CtxpredError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CtxpredError):
    """Bad configuration value, missing input file, or unusable run setup."""


class FormatError(CtxpredError):
    """An input file violates its declared schema."""


class SymbolError(CtxpredError):
    """A token or unit is not part of the model's alphabet."""


class AlignmentError(CtxpredError):
    """Two tables that must share row support do not."""


class CoverageError(CtxpredError):
    """Corpus tokens that the predictor source cannot score, or a failed join."""

    def __init__(self, message: str, missing: list | None = None):
        super().__init__(message)
        self.missing = missing or []


class ConvergenceError(CtxpredError):
    """An enumeration budget was exhausted before the tail bound was met."""

    def __init__(self, message: str, remaining: float | None = None):
        super().__init__(message)
        self.remaining = remaining


class DivergenceError(CtxpredError):
    """The generating process has no finite expected length."""


class DegenerateError(CtxpredError):
    """An operation hit a zero-variance or zero-norm input it cannot handle."""


class RankDeficiencyError(CtxpredError):
    """A design matrix is rank deficient or too ill-conditioned to trust."""

    def __init__(self, message: str, columns: list[str] | None = None):
        super().__init__(message)
        self.columns = columns or []


class ConditioningError(CtxpredError):
    """A linear system is too ill-conditioned for a reliable solve."""


class IdentityError(CtxpredError):
    """An exact algebraic identity between fitted models failed its tolerance."""

    def __init__(self, message: str, deltas: dict | None = None):
        super().__init__(message)
        self.deltas = deltas or {}


class BasisError(CtxpredError):
    """A spline basis could not be constructed from the given values."""


class SizeError(CtxpredError):
    """A combinatorial computation was requested above its hard size limit."""
