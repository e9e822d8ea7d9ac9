"""Exception hierarchy shared by every module."""


class BodeFracError(Exception):
    """Base class for all errors raised by bodefrac."""


class ModelError(BodeFracError, ValueError):
    """Invalid model data (violated invariant, malformed document)."""


class DomainError(BodeFracError, ValueError):
    """Function evaluated outside its domain, e.g. 0 ** a with a <= 0."""


class SingularityError(BodeFracError, ArithmeticError):
    """The characteristic function vanishes at the evaluation point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class BranchPointError(BodeFracError, ArithmeticError):
    """log S requested where S vanishes."""

    def __init__(self, message, point=None, nearest=None):
        super().__init__(message)
        self.point = point
        self.nearest = nearest


class RootFindingError(BodeFracError, ArithmeticError):
    """Simultaneous iteration failed to converge."""

    def __init__(self, message, iterates=None):
        super().__init__(message)
        self.iterates = iterates


class RefinementError(BodeFracError, ArithmeticError):
    """Newton refinement diverged or left the right half plane."""


class BoundaryZeroError(BodeFracError, ArithmeticError):
    """A zero lies on (or numerically too close to) a counting contour."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class BranchTrackingError(BodeFracError, ArithmeticError):
    """Phase could not be tracked continuously along a path."""


class TailDivergenceError(BodeFracError, ArithmeticError):
    """The frequency tail of the Bode integrand is not integrable."""


class ContourError(BodeFracError, ValueError):
    """Invalid contour geometry."""


class CorridorCollisionError(ContourError):
    """Two branch-cut corridors (or a corridor and a pole circle) overlap."""


class ConfigurationError(BodeFracError, ValueError):
    """Inconsistent run or model configuration."""
