"""Exception hierarchy shared by all nilcayley modules.

Exit-code mapping used by the CLI: PreconditionError -> 2,
ResourceLimitError -> 3, SamplingBudgetError -> 4.
"""


class NilcayleyError(Exception):
    """Base class for all package errors."""


class PreconditionError(NilcayleyError):
    """An operation was called outside its contract."""


class InvalidElementError(PreconditionError):
    """An element index is out of range for its group."""


class NotGeneratingError(PreconditionError):
    """A generating set does not generate the group."""


class ResourceLimitError(NilcayleyError):
    """A configured memory or size cap would be exceeded."""


class SamplingBudgetError(NilcayleyError):
    """Rejection sampling exhausted its candidate budget."""


class EnclosureBudgetError(NilcayleyError):
    """Certified enclosure could not reach the requested width.

    Carries the best enclosure found so far.
    """

    def __init__(self, lo: float, hi: float, message: str = ""):
        self.lo = lo
        self.hi = hi
        super().__init__(message or f"enclosure budget exhausted at [{lo}, {hi}]")
