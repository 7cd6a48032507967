"""Shared exception types."""


class InvalidInput(ValueError):
    """Malformed argument: overlapping parts, bad colour index, etc."""


class PreconditionError(ValueError):
    """A documented operation precondition failed; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class MissingFamilyMember(LookupError):
    """A custom family has no member at the requested size."""


class BudgetExceeded(RuntimeError):
    """Enumeration or search budget ran out; carries partial results."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ExactModeError(ValueError):
    """Exact enumeration requested beyond the configured part cap."""


class StageFailure(RuntimeError):
    """A multi-stage cover construction failed at a named stage."""

    def __init__(self, stage, message, trace=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.trace = trace


class SearchExhausted(RuntimeError):
    """A complete search ended with no solution (distinct from BudgetExceeded)."""
