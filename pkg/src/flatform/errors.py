"""Exception hierarchy shared by every flatform module."""


class FlatformError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(FlatformError, ValueError):
    """Invalid scenario, graph or weight configuration."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InvalidWeightError(ConfigError):
    """A weight that must be strictly positive is not."""


class DomainError(FlatformError, ValueError):
    """Argument outside the domain of an operation (e.g. time outside horizon)."""


class InvalidMatrixError(FlatformError, ValueError):
    """Matrix with non-finite entries handed to a numerical routine."""


class NumericalError(FlatformError, ArithmeticError):
    """Numerical breakdown (singular solve, divergence)."""


class PlannerSingularError(NumericalError):
    def __init__(self, message, rcond=None):
        self.rcond = rcond
        super().__init__(message)


class RiccatiDivergenceError(NumericalError):
    pass


class SingularityError(FlatformError):
    """State sits on a singular set (collision boundary, free fall, pitch +-90 deg)."""

    def __init__(self, message, pair=None, time=None):
        self.pair = pair
        self.time = time
        super().__init__(message)


class FlatnessSingularError(SingularityError):
    pass


class CollisionViolationError(FlatformError):
    """A pair of UAVs entered the collision region during simulation."""

    def __init__(self, message, pair=None, time=None, distance=None):
        self.pair = pair
        self.time = time
        self.distance = distance
        super().__init__(message)
