"""Error types shared across the package.

Mathematical failure modes get their own exception classes so callers (and the
CLI exit-code logic) can tell a bad computation apart from a bad input.
"""


class OpecalcError(Exception):
    """Base class for all package errors."""


class ParseError(OpecalcError):
    """Malformed textual input; carries 1-based line/column of the offender."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NotAUnit(OpecalcError):
    """Division by a scalar that is not invertible in Q(k)[h,t]."""


class ZeroDenominator(OpecalcError):
    """Rational function with an identically zero denominator."""


class PoleAtLevel(OpecalcError):
    """Evaluation of a rational function at a root of its denominator."""


class InfiniteGradedPiece(OpecalcError):
    """Basis enumeration would not terminate without a length/charge cutoff."""


class OracleUnsupported(OpecalcError):
    """The mode-level oracle does not cover this presentation family."""


class NotAlmostCommutative(OpecalcError):
    """Classical limit requested for a table with h-degree-0 bracket terms."""


class NotPoisson(OpecalcError):
    """Finite-dimensional bracket table fails antisymmetry or Jacobi."""


class InvalidComoment(OpecalcError):
    """Proposed comoment map is not a bracket homomorphism on generators."""


class NotDominant(OpecalcError):
    """Partition update leaves the dominant cone."""


class NoComoment(OpecalcError):
    """Embedding problem lacks a declared comoment generator."""


class Unsolvable(OpecalcError):
    """Embedding constraints have no solution at this cutoff/ansatz.

    Carries the residual constraint generators so the failure is inspectable.
    """

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)


class AnsatzTooSmall(OpecalcError):
    """A source generator's grade admits no candidate monomials at all."""


class ResidualNonzero(OpecalcError):
    """Embedding verification found a nonzero OPE residual."""

    def __init__(self, message, pair=None, lambda_power=None):
        super().__init__(message)
        self.pair = pair
        self.lambda_power = lambda_power
