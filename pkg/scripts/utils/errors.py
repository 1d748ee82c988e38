"""
Exception hierarchy shared by every fedocheck module.
"""

from typing import Optional


class FedocheckError(Exception):
    """Base class for all errors raised by fedocheck."""


class CapExceededError(FedocheckError):
    """A requested computation is outside the configured size caps."""


class ShapeMismatchError(FedocheckError):
    """Tensor orders, dimensions or plan labels do not fit together."""


class MembershipError(FedocheckError):
    """A tensor is not in the symmetry space it is claimed to belong to."""


class ConventionAuditError(MembershipError):
    """A computed curvature failed the curvature-space membership gate."""


class RankDisagreementError(FedocheckError):
    """Ranks over two primes / two sample batches disagree."""


class DegenerateSamplingError(FedocheckError):
    """Random sampling failed to produce a usable witness."""


class InsufficientJetError(FedocheckError):
    """The polynomial degree of a structure is too small for the requested jet."""


class ExprError(FedocheckError):
    """Base class for index-expression language errors."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class ExprArityError(ExprError):
    pass


class ExprVarianceError(ExprError):
    pass


class InconsistentTermsError(ExprError):
    pass


class MissingBindingError(ExprError):
    pass


class SingularFormError(FedocheckError):
    """A bilinear form or matrix that must be invertible is singular."""


class UsageError(FedocheckError, ValueError):
    """An argument or input file is outside what the command accepts."""


class UnknownNameError(FedocheckError, KeyError):
    """A built-in, suite or variant name is not registered."""

    def __str__(self):
        return str(self.args[0]) if self.args else ''
