"""Exception hierarchy shared by all reeblab modules."""


class ReeblabError(Exception):
    """Base class for all errors raised by this package."""


class QuadratureNonconvergence(ReeblabError):
    """Adaptive quadrature exceeded its node budget before reaching tolerance."""


class DegenerateFormError(ReeblabError):
    """A 2-form density vanished at an interior point where positivity is required."""


class EscapeError(ReeblabError):
    """An integrated trajectory left the closed disk by more than the geometric tolerance."""


class NotFixingOriginError(ReeblabError):
    """A map assumed to fix the origin moved it by more than the geometric tolerance."""


class UnwrapFailure(ReeblabError):
    """Angular increments between grid nodes exceeded pi; the lift grid is too coarse."""


class NotMonotoneError(ReeblabError):
    """The strip lift has somewhere non-positive radial derivative."""


class NonClosedError(ReeblabError):
    """The generating 1-form has curl residual above tolerance; the map does not preserve the form."""


class FixedPointMismatch(ReeblabError):
    """The point handed to a conjugation is not fixed within tolerance."""


class HypothesisViolation(ReeblabError):
    """A fixed-point search was invoked on data violating its hypotheses."""


class ParameterOutOfRange(ReeblabError):
    """A numeric parameter is outside its admissible interval."""


class PackingTimeout(ReeblabError):
    """The disk packer stalled below the target density within its disk budget."""


class GeometryViolation(ReeblabError):
    """A construction constraint on the packing geometry failed."""


class NonPositiveReturnTime(ReeblabError):
    """The return-time field is not positive, so no suspension flow exists."""


class MissingInputError(ReeblabError):
    """A command required an input file that does not exist."""


class ConfigError(ReeblabError):
    """A run configuration is invalid."""
