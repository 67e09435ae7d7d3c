"""Exception hierarchy for the adacsl package."""


class AdacslError(Exception):
    """Base class for all domain and data errors raised by adacsl."""


class InputError(AdacslError, ValueError):
    pass


class DimensionError(InputError):
    pass


class DegenerateCostError(InputError):
    pass


class DegenerateDataError(InputError):
    pass


class GeometryError(AdacslError):
    pass


class InfeasibleError(AdacslError):
    pass


class FormatVersionError(AdacslError):
    """A model document was written by an unsupported format version."""


class ParseError(AdacslError):
    pass


class IngestionError(AdacslError):
    pass


class StratificationError(InputError):
    pass


class AggregationError(AdacslError):
    pass


class NonConvergenceError(AdacslError):
    """The adaptive loop hit its iteration limit before the static threshold met the budget.

    ``trace`` holds every iteration record and ``model`` the last model trained,
    so callers can still inspect or deploy it.
    """

    def __init__(self, message, trace=None, model=None):
        super().__init__(message)
        self.trace = trace
        self.model = model
