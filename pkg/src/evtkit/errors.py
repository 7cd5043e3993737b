"""Exception types shared across the package."""


class EvtError(Exception):
    """Base class for evtkit errors."""


class DomainError(EvtError, ValueError):
    """An input lies outside the support or domain of an operation."""


class FitError(EvtError, RuntimeError):
    """A model fit failed to converge or the data cannot support it."""


class DegenerateDataError(FitError):
    """The data carry no information about the parameters (e.g. all equal)."""


class MinimumSampleError(FitError):
    """Too few observations for the requested fit."""


class SchemaError(EvtError, KeyError):
    """A formula or command references a column that does not exist."""


class RankError(EvtError, ValueError):
    """A basis has more dimensions than the data can identify."""


class PreconditionError(EvtError, ValueError):
    """A documented precondition of an estimator is violated."""


class IngestError(EvtError, ValueError):
    """A data file could not be parsed."""


class EvtWarning(UserWarning):
    """Base class for evtkit warnings."""


class ExtrapolationWarning(EvtWarning):
    """Covariates fell outside the training range of a spline basis."""


class SparseDataWarning(EvtWarning):
    """Fewer exceedances than recommended for a stable estimate."""


class BoundaryWarning(EvtWarning):
    """An optimiser finished on a parameter box boundary."""


class NumericError(ArithmeticError, EvtError):
    """Quadrature or root finding did not reach the requested tolerance."""
