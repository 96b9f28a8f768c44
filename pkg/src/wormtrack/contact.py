"""Pipe environment: diameter profile, surface catalog, traction capacity.

The pipe is rigid (the hardware testbed is an acrylic tube); compliance
lives entirely in the tracks through their radial stiffness constant.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .drivetrain import DriveTrainParams
from .errors import ParameterError

# Wall friction placeholders; the ordering smooth < tissue < foam is what
# matters and is preserved by calibration, which rescales the stiffness.
SURFACE_FRICTION = {
    "smooth": 0.2,
    "tissue": 0.35,
    "foam": 0.5,
}

BRACKET_VERBATIM = "verbatim"
BRACKET_SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class SurfaceSpec:
    """A named lumen surface with its track friction coefficient."""

    name: str
    wall_friction: float

    def __post_init__(self) -> None:
        if self.name not in SURFACE_FRICTION and self.name != "custom":
            raise ParameterError(
                f"unknown surface {self.name!r}; use one of "
                f"{sorted(SURFACE_FRICTION)} or 'custom'"
            )
        if self.wall_friction <= 0.0:
            raise ParameterError("wall_friction must be positive")


def surface(name: str, wall_friction: float | None = None) -> SurfaceSpec:
    """Catalog lookup; ``custom`` requires an explicit friction value."""
    if name == "custom":
        if wall_friction is None:
            raise ParameterError("surface 'custom' needs a wall_friction value")
        return SurfaceSpec("custom", wall_friction)
    if name not in SURFACE_FRICTION:
        raise ParameterError(f"unknown surface {name!r}")
    return SurfaceSpec(name, wall_friction if wall_friction is not None else SURFACE_FRICTION[name])


@dataclass(frozen=True)
class Station:
    """One profile sample: axial position, inner diameter, governing surface."""

    position: float
    diameter: float
    surface: SurfaceSpec


@dataclass(frozen=True)
class PipeProfile:
    """Inner diameter versus axial position, linear taper between stations.

    The surface between two stations is the upstream station's.  The
    scale factor records how the profile relates to a 1:1 anatomy (the
    desk prototype runs at 4:1); stations are stored already scaled.
    """

    stations: tuple[Station, ...]
    length: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.stations:
            raise ParameterError("profile needs at least one station")
        if self.length < 0.0:
            raise ParameterError("profile length must be non-negative")
        positions = [s.position for s in self.stations]
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ParameterError("station positions must be strictly increasing")
        if any(s.diameter <= 0.0 for s in self.stations):
            raise ParameterError("station diameters must be positive")


@dataclass(frozen=True)
class ContactState:
    """Track-wall engagement at one location."""

    engaged: bool
    deflection: float
    normal_force_per_track: float

    def __post_init__(self) -> None:
        if self.normal_force_per_track < 0.0:
            raise ParameterError("normal force must be non-negative")
        if not self.engaged and self.normal_force_per_track != 0.0:
            raise ParameterError("disengaged contact carries no normal force")


def uniform_profile(diameter: float, length: float, surf: SurfaceSpec) -> PipeProfile:
    """Constant-diameter pipe, the testbed tube configuration."""
    return PipeProfile(stations=(Station(0.0, diameter, surf),), length=length)


def pipe_diameter_at(profile: PipeProfile, x: float) -> tuple[float, SurfaceSpec]:
    """Interpolated inner diameter and governing surface at position ``x``."""
    if not 0.0 <= x <= profile.length:
        raise ParameterError(
            f"position {x:.4f} m outside profile [0, {profile.length:.4f}]"
        )
    stations = profile.stations
    i = bisect_right([s.position for s in stations], x)
    if i == 0:
        return stations[0].diameter, stations[0].surface
    if i == len(stations):
        return stations[-1].diameter, stations[-1].surface
    a, b = stations[i - 1], stations[i]
    t = (x - a.position) / (b.position - a.position)
    return a.diameter + t * (b.diameter - a.diameter), a.surface


def with_surface(profile: PipeProfile, surf: SurfaceSpec) -> PipeProfile:
    """Copy of the profile with every station lined with ``surf``."""
    return PipeProfile(
        stations=tuple(Station(s.position, s.diameter, surf) for s in profile.stations),
        length=profile.length,
        scale=profile.scale,
    )


def contact_deflection(
    tip_diameter: float,
    lumen_diameter: float,
    params: DriveTrainParams,
    bracket: str = BRACKET_VERBATIM,
) -> float:
    """Engagement bracket feeding the traction law, clamped at zero.

    The verbatim form, ``D - (W - d)/2`` with D the tip diameter, W the
    lumen diameter and d the worm diameter, is dimensionally irregular
    (full diameter minus half clearance) but is what the track stiffness
    constant is calibrated against.  The ``symmetric`` variant,
    ``(D - W + d)/2``, is available for sensitivity studies.
    """
    if tip_diameter <= 0.0 or lumen_diameter <= 0.0:
        raise ParameterError("diameters must be positive")
    d = params.worm_diameter
    if bracket == BRACKET_VERBATIM:
        value = tip_diameter - (lumen_diameter - d) / 2.0
    elif bracket == BRACKET_SYMMETRIC:
        value = (tip_diameter - lumen_diameter + d) / 2.0
    else:
        raise ParameterError(f"unknown bracket variant {bracket!r}")
    return max(0.0, value)


def contact_state(
    tip_diameter: float,
    lumen_diameter: float,
    params: DriveTrainParams,
    bracket: str = BRACKET_VERBATIM,
) -> ContactState:
    deflection = contact_deflection(tip_diameter, lumen_diameter, params, bracket)
    return ContactState(
        engaged=deflection > 0.0,
        deflection=deflection,
        normal_force_per_track=params.track_stiffness * deflection,
    )


def traction_capacity(
    tip_diameter: float,
    lumen_diameter: float,
    params: DriveTrainParams,
    surf: SurfaceSpec | None = None,
    bracket: str = BRACKET_VERBATIM,
) -> float:
    """Maximum static friction the tracks can transmit to the wall.

    n * mu * k * deflection, non-negative, zero once wall contact is
    lost.  The friction coefficient comes from the surface when given,
    else from the drive parameters.
    """
    mu = surf.wall_friction if surf is not None else params.wall_friction
    state = contact_state(tip_diameter, lumen_diameter, params, bracket)
    return params.track_count * mu * state.normal_force_per_track


# Colon segment diameters at 1:1 anatomy scale, rectum to cecum (m).
_COLON_SEGMENTS = (
    ("rectum", 0.036),
    ("sigmoid", 0.026),
    ("descending", 0.033),
    ("transverse", 0.037),
    ("ascending", 0.045),
    ("cecum", 0.044),
)

# Station positions along the insertion path (m at 1:1).  Segment lengths
# are representative adult anatomy; only the diameters are measured values.
_COLON_POSITIONS = (0.0, 0.15, 0.55, 0.80, 1.25, 1.45)
_COLON_LENGTH = 1.55


def colon_preset(scale: float = 1.0, surf: SurfaceSpec | None = None) -> PipeProfile:
    """Six-segment colon profile, scaled geometrically by ``scale``.

    Diameters span 26 mm (sigmoid) to 45 mm (ascending) at 1:1; the desk
    prototype targets this profile at 4:1.  Surfaces default to tissue.
    """
    if scale <= 0.0:
        raise ParameterError("scale must be positive")
    if surf is None:
        surf = surface("tissue")
    stations = tuple(
        Station(pos * scale, diam * scale, surf)
        for pos, (_, diam) in zip(_COLON_POSITIONS, _COLON_SEGMENTS)
    )
    return PipeProfile(stations=stations, length=_COLON_LENGTH * scale, scale=scale)


def colon_station_names() -> tuple[str, ...]:
    return tuple(name for name, _ in _COLON_SEGMENTS)
