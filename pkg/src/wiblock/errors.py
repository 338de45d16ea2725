"""Exception types shared across the package."""


class WiblockError(Exception):
    """Base class for every error raised by this package."""


class MalformedInput(WiblockError):
    """A configuration document could not be parsed."""


class UnknownKey(WiblockError):
    def __init__(self, key, section=None):
        self.key = key
        self.section = section
        where = f" in section [{section}]" if section else ""
        super().__init__(f"unknown configuration key {key!r}{where}")


class InvariantViolation(WiblockError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(WiblockError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class CapExceeded(WiblockError):
    """Exhaustive enumeration was requested beyond its size cap."""


class Unstable(WiblockError):
    def __init__(self, load, what="queue"):
        self.load = load
        super().__init__(f"{what} is unstable (offered load {load:.6g} >= 1)")


class NonConvergence(WiblockError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )


class InvalidHorizon(WiblockError, ValueError):
    """Simulation horizon is not a positive finite time."""


class MissingData(WiblockError):
    """Expected result files are absent."""
