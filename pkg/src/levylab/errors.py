"""Exception hierarchy used across levylab."""


class LevyLabError(Exception):
    """Base class for all levylab errors."""


class DomainError(LevyLabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ParameterError(LevyLabError, ValueError):
    """A numerical or structural parameter is invalid."""


class UnsupportedModelError(LevyLabError):
    """The model does not satisfy the hypotheses the operation relies on."""


class NoJumpError(LevyLabError):
    """The truncated jump measure has zero mass, so no jump can be drawn."""


class ResolutionError(LevyLabError):
    """The grid is too coarse for the requested discretization."""


class GridAlignmentError(LevyLabError):
    """A sub-interval or point is not aligned with the grid."""


class NumericalInstabilityError(LevyLabError):
    """A computed quantity left its admissible range beyond tolerance."""


class ConvergenceError(LevyLabError):
    """An iterative method hit its iteration cap without converging."""


class HypothesisViolation(LevyLabError):
    """A model violates the standing hypotheses and validation mode is off."""
