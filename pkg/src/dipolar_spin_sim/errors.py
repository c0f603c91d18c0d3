"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for every numerical failure reported by the package."""


class NonConvergence(SimulationError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class NegativeEigenvalue(SimulationError):
    pass


class ResonantDrive(SimulationError):
    """The modulation frequency sits inside the forbidden band around a coupled mode."""

    def __init__(self, message, omega=None, mode=None):
        super().__init__(message)
        self.omega = omega
        self.mode = mode


class DimensionMismatch(SimulationError, ValueError):
    pass


class TruncationLeak(SimulationError):
    def __init__(self, message, leakage=None):
        super().__init__(message)
        self.leakage = leakage


class StepFailure(SimulationError):
    pass


class TrackingAmbiguity(SimulationError):
    pass


class NoCrossing(SimulationError):
    pass


class OutsideLinearWindow(SimulationError):
    pass


class ConfigError(ValueError):
    """Bad experiment configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
