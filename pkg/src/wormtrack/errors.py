"""Exception hierarchy shared across the package."""


class WormtrackError(Exception):
    """Base class for all wormtrack errors."""


class ParameterError(WormtrackError):
    """A parameter set violates a physical or structural invariant."""


class MotorSpeedError(WormtrackError):
    """Commanded rotation speed exceeds the motor's no-load speed."""


class PressureRangeError(WormtrackError):
    """Pressure outside the characterised bellows operating range."""


class GeometryError(WormtrackError):
    """Strut geometry infeasible at the requested state."""


class UnreachableDiameterError(WormtrackError):
    """Requested tip diameter outside the achievable expansion range."""


class ForceInfeasibleError(WormtrackError):
    """Requested contact force exceeds what the expansion unit can supply."""


class ConfigError(WormtrackError):
    """Scenario config rejected; carries the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if key is not None:
            parts.append(f"key '{key}'")
        prefix = ", ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
