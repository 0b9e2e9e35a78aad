"""Exception hierarchy.

Everything derives from ``ValueError`` or ``RuntimeError`` so callers that do
not care about the distinction can catch the builtin.
"""


class ParameterError(ValueError):
    """Model or solver parameters outside their admissible range."""


class DomainError(ValueError):
    """Evaluation point outside the domain of holomorphy."""


class PoleProximityError(DomainError):
    """Evaluation point within the guard radius of a pole."""


class CutProximityError(DomainError):
    """Evaluation point within the guard distance of a branch cut."""


class StripError(DomainError):
    """Evaluation point outside the strip where an integral representation converges."""


class SolverError(RuntimeError):
    """A numerical procedure failed to converge or produced an inconsistent result."""


class BracketError(SolverError):
    """No sign change on a bracket that should contain exactly one root."""


class BoundFalsified(RuntimeError):
    """A certified inequality failed on the evaluation grid."""
