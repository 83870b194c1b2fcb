"""Exception hierarchy shared by all fluxdac modules."""


class FluxDacError(Exception):
    """Base class for every error raised by fluxdac."""


class InvalidParameterError(FluxDacError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class PresetError(FluxDacError, ValueError):
    pass


class OutOfRangeError(FluxDacError, ValueError):
    pass


class WaveformError(FluxDacError, ValueError):
    pass


class NonConvergenceError(FluxDacError, RuntimeError):
    pass


class WindowOverflowError(FluxDacError):
    """A programming event would leave the usable digit window.

    ``state`` holds the DAC state clamped to the window edge.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class RoutingError(FluxDacError, ValueError):
    pass


class ScheduleError(FluxDacError):
    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"schedule entry {index}: {cause}")


class ConfinementError(FluxDacError, ValueError):
    pass


class DegenerateDataError(FluxDacError, ValueError):
    pass


class ConfigError(FluxDacError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
