"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class DimensionError(SimulationError, ValueError):
    pass


class ShapeError(SimulationError, ValueError):
    pass


class ParameterError(SimulationError, ValueError):
    pass


class StateError(SimulationError, RuntimeError):
    pass


class LayoutError(SimulationError, ValueError):
    pass


class StabilityError(SimulationError, ValueError):
    """Raised when an explicit time step violates the stability bound."""


class ScheduleError(SimulationError, ValueError):
    pass


class CalibrationError(SimulationError, ValueError):
    pass


class ConfigError(SimulationError, ValueError):
    pass


class TraceError(ConfigError):
    """Malformed event trace line."""
