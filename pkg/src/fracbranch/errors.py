"""Exception hierarchy shared by all fracbranch modules.

Validation-type errors derive from ValueError so that callers who do not
care about the finer distinction can catch the builtin.  Runtime failures
(censoring, solver breakdown, resource guards) derive from RuntimeError.
"""


class FracbranchError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FracbranchError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class PreconditionError(FracbranchError, ValueError):
    """A structural precondition is violated (grid shape, replication count)."""


class InputError(FracbranchError, ValueError):
    """Malformed data input (empty samples, nonfinite entries)."""


class CensoringError(FracbranchError, RuntimeError):
    """A path inversion or time-change ran past the simulated horizon."""


class NumericalError(FracbranchError, RuntimeError):
    """A numerical routine failed to converge within its budget."""


class AccuracyError(FracbranchError, RuntimeError):
    """The requested value cannot be produced at the supported precision."""


class ResourceError(FracbranchError, RuntimeError):
    """An event or memory budget was exhausted (e.g. supercritical growth)."""
