"""Exception hierarchy shared across the package."""


class BipartiteClusteringError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BipartiteClusteringError, ValueError):
    """Malformed arguments: wrong shapes, non-finite entries, bad ranges."""


class NumericalError(BipartiteClusteringError, ArithmeticError):
    pass


class InitializationError(BipartiteClusteringError):
    pass


class DegenerateClusterError(BipartiteClusteringError):
    """A cluster lost every member (an all-zero column of B)."""


class UndefinedMetricError(BipartiteClusteringError, ValueError):
    pass


class ParseError(BipartiteClusteringError, ValueError):
    pass


class EstimationError(BipartiteClusteringError, ValueError):
    pass


class DegenerateSpecError(InvalidInputError):
    pass
