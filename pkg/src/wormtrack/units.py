"""Unit handling at the config and CSV boundary.

Everything inside the library is SI: meters, newtons, pascals, radians
per second, seconds.  Millimetres, centimetres, millibars and RPM exist
only in scenario configs, CLI flags and this module.
"""

from __future__ import annotations

import math
import re

RPM_TO_RAD_S = math.pi / 30.0
GRAVITY = 9.81  # m/s^2


def rpm_to_rad_s(rpm: float) -> float:
    return rpm * RPM_TO_RAD_S


def rad_s_to_rpm(omega: float) -> float:
    return omega / RPM_TO_RAD_S


class UnitError(ValueError):
    """Quantity string malformed, or its unit does not fit the dimension."""


# symbol -> factor to the SI unit of each dimension
_TABLES: dict[str, dict[str, float]] = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "pressure": {"pa": 1.0, "kpa": 1e3, "mbar": 100.0, "bar": 1e5},
    "force": {"n": 1.0},
    "torque": {"nm": 1.0, "n*m": 1.0, "mnm": 1e-3},
    "rotation": {"rpm": RPM_TO_RAD_S, "rad/s": 1.0},
    "time": {"s": 1.0, "ms": 1e-3},
    "mass": {"kg": 1.0, "g": 1e-3},
    "stiffness": {"n/m": 1.0, "n/mm": 1e3},
    "none": {"": 1.0},
}

_QTY_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Z/*]*)\s*$")


def parse_quantity(text: str, dimension: str) -> float:
    """Parse a value like ``"3 mm"`` or ``"-101mbar"`` into SI.

    ``dimension`` picks the accepted unit table.  Dimensionless values
    ("none") must not carry a unit.  Raises :class:`UnitError` on a
    malformed number or a unit that does not belong to the dimension.
    """
    m = _QTY_RE.match(text)
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    unit = m.group(2).lower()
    table = _TABLES[dimension]
    if unit not in table:
        allowed = ", ".join(sorted(u for u in table if u)) or "no unit"
        raise UnitError(f"unit {unit or 'missing'!r} invalid for {dimension} (accepts: {allowed})")
    return value * table[unit]


def parse_rpm(text: str) -> float:
    """Parse a rotation speed given in RPM; a bare number means RPM."""
    m = _QTY_RE.match(text)
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    unit = m.group(2).lower()
    if unit in ("", "rpm"):
        return value
    if unit == "rad/s":
        return rad_s_to_rpm(value)
    raise UnitError(f"unit {unit!r} invalid for a rotation speed (accepts: rpm, rad/s)")
