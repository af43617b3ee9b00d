"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures to the documented process exit status without a lookup table.
"""


class BosonizationError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    kind = "error"


class ConfigError(BosonizationError, ValueError):
    exit_code = 2
    kind = "config"


class ConstructionError(BosonizationError, ValueError):
    """Invalid geometry or index structure (patches, mode ordering, ...)."""

    exit_code = 3
    kind = "construction"


class StructuralError(ConstructionError):
    """Dimension or ordering mismatch between objects that must conform."""


class EmptyModeError(ConstructionError):
    """A momentum transfer ``k`` has an empty index set."""


class SingularityError(BosonizationError, ArithmeticError):
    exit_code = 4
    kind = "numerical"


class DegeneracyError(SingularityError):
    """A resolvent denominator vanished to working precision."""


class RouteDisagreementError(SingularityError):
    """Two independent computations of the same matrix disagree."""


class QuadratureError(SingularityError):
    """Adaptive quadrature did not reach its own error target."""


class FeasibilityError(BosonizationError, RuntimeError):
    """Requested instance is too large for an exact computation."""

    exit_code = 5
    kind = "feasibility"


class LatticeOverflowError(FeasibilityError, OverflowError):
    pass
