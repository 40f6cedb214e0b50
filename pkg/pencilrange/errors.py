"""Exceptions and warnings raised by pencilrange"""
from __future__ import annotations

from typing import Optional


class PencilRangeError(Exception):
    """Base class of every error raised by pencilrange"""


class NotHermitian(PencilRangeError, ValueError):
    """A matrix expected to be Hermitian is not, within the Hermitian tolerance"""


class NotPositive(PencilRangeError, ValueError):
    """A Hermitian matrix expected to be positive definite is not"""


class NoConvergence(PencilRangeError, ArithmeticError):
    """An eigenvalue iteration exceeded its iteration cap"""


class SingularB(PencilRangeError, ArithmeticError):
    """The B member of a pencil is too ill-conditioned to invert

    Arguments:
        condition: the estimated 2-norm condition number of B
    """

    def __init__(self, condition: float):
        super().__init__(f"cond(B) = {condition:.3e} exceeds the inversion limit")
        self.condition = condition


class GridMismatch(PencilRangeError, ValueError):
    """Two rasters do not share the same box and resolution"""


class EmptyRegion(PencilRangeError, ValueError):
    """An operation needs a non-empty region"""


class InvalidSpec(PencilRangeError, ValueError):
    """A truncation spec is not valid for the family it is applied to"""


class UnsupportedFamily(PencilRangeError, TypeError):
    """The family does not provide the structure an operation needs"""


class NoOppositePair(PencilRangeError, ArithmeticError):
    """No tail pair or triple admits a convex combination through zero"""


class OutsideEssentialRange(PencilRangeError, ValueError):
    """An injection target lies outside the estimated essential range"""


class NotApplicable(PencilRangeError, ValueError):
    """The hypotheses of an exclusion test are not met"""


class GapViolated(PencilRangeError, ValueError):
    """The first part of a gap pair does not lie strictly left of the second"""


class ConfigError(PencilRangeError, ValueError):
    """An experiment document is malformed

    Arguments:
        message: the diagnostic
        field: dotted path of the offending field, if known
        line: line of the offending token, if known
    """

    def __init__(
        self, message: str, field: Optional[str] = None, line: Optional[int] = None
    ):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line


class ExpressionError(ConfigError):
    """A coefficient expression does not follow the expression grammar"""


class ConditionViolated(UserWarning):
    """A coefficient condition of a family does not hold on the sampled grid"""
