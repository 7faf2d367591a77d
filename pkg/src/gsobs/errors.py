"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes, so keep the classes stable.
"""


class GSObsError(Exception):
    """Base class for library errors."""


class DomainError(GSObsError, ValueError):
    """An input lies outside the domain of an operation."""


class NotQuasiAnalyticError(DomainError):
    """A Bang degree is infinite, so no finite constant can be built from it."""


class PaddingError(DomainError):
    """The ladder-operator padding margin is too small for the requested order."""


class OverlapViolation(GSObsError):
    """A ball cover exceeds its theoretical overlap bound."""

    def __init__(self, message, witness=None, multiplicity=None):
        super().__init__(message)
        self.witness = witness
        self.multiplicity = multiplicity


class QuadratureError(GSObsError):
    """Composite quadrature failed to stabilise."""


class SingularGramianError(GSObsError):
    """The observation Gramian is numerically singular."""


class TruncationUnreliableError(GSObsError):
    """A Galerkin quantity sits at the numerical floor and cannot be trusted."""
