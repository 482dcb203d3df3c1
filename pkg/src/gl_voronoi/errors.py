"""Exception types raised across the package."""


class VoronoiError(Exception):
    """Base class for all package errors."""


class PoleError(VoronoiError, ValueError):
    """Argument lies on (or numerically at) a pole of a gamma factor."""


class AccuracyError(VoronoiError, ArithmeticError):
    """No evaluation regime reaches the requested accuracy."""


class ConvergenceError(VoronoiError, ArithmeticError):
    """Adaptive quadrature exhausted its panel budget."""


class TruncationError(VoronoiError, ArithmeticError):
    """No admissible truncation height satisfies the tail bound."""


class PrePostError(VoronoiError, ValueError):
    """A documented precondition of an operation is violated."""


class IllConditionedError(VoronoiError, ArithmeticError):
    """Least-squares basis is too ill-conditioned to trust."""


class CapacityError(VoronoiError, ValueError):
    """Requested size exceeds a memory or brute-force guard."""


class RangeError(VoronoiError, ValueError):
    """Requested range exceeds the precomputed coefficient table."""


class DomainError(VoronoiError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class DivisibilityError(VoronoiError, ValueError):
    """Broken divisor chain in a hyper-Kloosterman sum."""


class CacheError(VoronoiError, OSError):
    """Coefficient cache file is missing, malformed or fails its checksum."""
