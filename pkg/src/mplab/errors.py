"""Exception hierarchy shared by all modules."""


class MplabError(Exception):
    pass


class DomainError(MplabError, ValueError):
    """Argument lies outside the domain on which a profile or operator is defined."""


class ParameterError(MplabError, ValueError):
    """Invalid construction parameter."""


class PreconditionError(MplabError, ValueError):
    """Input fails a stated precondition (ordering, certification, ...)."""


class NotSubharmonicError(PreconditionError):
    """Input is not (certifiably) subharmonic for the drifted Laplacian."""


class InvariantViolation(MplabError, RuntimeError):
    """An internal invariant that should hold by construction was violated."""
