"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`OstroError`
so the CLI can map it onto an exit code.
"""


class OstroError(Exception):
    """Base class for all package errors."""


class ValidationError(OstroError):
    """Malformed input: bad sequence, bad kernel, bad rational, ..."""


class InvalidSequence(ValidationError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"defining inequality q[k+1] >= q[k](q[k]+1) fails at index {index}")


class NotInRange(ValidationError):
    pass


class DegenerateKernel(ValidationError):
    pass


class InsufficientDepth(OstroError):
    """The sequence cannot be materialized far enough for the request."""


class DepthOverflow(InsufficientDepth):
    """Exact materialization would exceed ``max_exact_depth``."""


class BudgetExceeded(OstroError):
    pass


class PrecisionBudget(OstroError):
    """A requested tolerance could not be met within depth/precision limits."""


class NonTerminatingBudget(PrecisionBudget):
    def __init__(self, partial, message="expansion did not terminate within max_terms"):
        self.partial = partial
        super().__init__(message)


class Undecidable(OstroError):
    """A comparison could not be settled.

    ``certified_gap`` is True when the point provably lies in a gap between
    cylinders of rank ``rank`` (so it is outside the set), and False when the
    enclosures simply never separated within the retry budget.
    """

    def __init__(self, rank, certified_gap, message=None):
        self.rank = rank
        self.certified_gap = certified_gap
        if message is None:
            if certified_gap:
                message = f"point lies in a gap between cylinders of rank {rank}"
            else:
                message = f"enclosures did not separate at rank {rank}"
        super().__init__(message)


class SummabilityViolated(ValidationError):
    pass


class NotExact(OstroError):
    """An exact rational was requested from a kernel with irrational entries."""
