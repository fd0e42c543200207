"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for failures raised while a simulation is running."""


class InputError(SimulationError, ValueError):
    """An operation received an argument outside its domain."""


class GeometryError(InputError):
    pass


class CalibrationError(SimulationError):
    """A calibration step produced an unusable result (e.g. a saturated device)."""

    def __init__(self, message, device=None):
        super().__init__(message)
        self.device = device


class ExtractionError(SimulationError):
    """Parameter extraction could not find the feature it needs in a trace."""


class ConfigError(ValueError):
    """Invalid run configuration. ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
