"""Bellows-driven scissor-strut expansion of the robot tip.

Four identical units sit around the body: a soft pneumatic bellows
drives the base of a rigid strut along the axis, and the strut props a
track frame radially.  Positive gauge pressure extends the bellows and
contracts the tip; vacuum contracts the bellows and expands the tip.

The pressure-to-displacement curves are monotone piecewise-linear maps
through measured anchor points of the desk prototype (operating range
-10100 Pa to +28300 Pa, 8.98 mm peak axial stroke, tip diameter
151.6 / 140.0 / 99.6 mm at vacuum / ambient / peak pressure).  The
strut constants are not directly measurable on the hardware; they are
solved so the three tip-diameter anchors hold exactly, see
:func:`solve_strut_geometry`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .errors import (
    ForceInfeasibleError,
    GeometryError,
    ParameterError,
    PressureRangeError,
    UnreachableDiameterError,
)

BELLOWS_UNITS = 4

# Characterisation anchors of the prototype expansion hardware (SI).
PRESSURE_MIN = -10100.0      # Pa gauge
PRESSURE_MAX = 28300.0       # Pa gauge
AXIAL_STROKE_MAX = 0.00898   # m, at PRESSURE_MAX
HEIGHT_STROKE_MAX = 0.0063   # m, parasitic
WIDTH_STROKE_MAX = 0.00212   # m, parasitic
DIAMETER_AMBIENT = 0.140     # m, at zero gauge pressure
DIAMETER_EXPANDED = 0.1516   # m, at PRESSURE_MIN
DIAMETER_CONTRACTED = 0.0996  # m, at PRESSURE_MAX
PEAK_NORMAL_FORCE = 3.89     # N, strut-top contact force at full vacuum


@dataclass(frozen=True)
class PiecewiseLinear:
    """Monotone piecewise-linear curve through ``points`` (x strictly increasing).

    Outside the covered x-range the end segments extrapolate when
    ``extrapolate`` is set, otherwise a ValueError is raised.
    """

    points: tuple[tuple[float, float], ...]
    extrapolate: bool = False

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ParameterError("piecewise-linear curve needs at least two points")
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ParameterError("curve x values must be strictly increasing")

    @property
    def x_min(self) -> float:
        return self.points[0][0]

    @property
    def x_max(self) -> float:
        return self.points[-1][0]

    def __call__(self, x: float) -> float:
        pts = self.points
        if (x < pts[0][0] or x > pts[-1][0]) and not self.extrapolate:
            raise ValueError(f"{x} outside curve domain [{pts[0][0]}, {pts[-1][0]}]")
        i = bisect_right([p[0] for p in pts], x)
        i = min(max(i, 1), len(pts) - 1)
        (x0, y0), (x1, y1) = pts[i - 1], pts[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def _line_through_zero(x_at_max: float, y_at_max: float, x_min: float,
                       extrapolate: bool = False) -> PiecewiseLinear:
    slope = y_at_max / x_at_max
    return PiecewiseLinear(
        points=((x_min, slope * x_min), (0.0, 0.0), (x_at_max, y_at_max)),
        extrapolate=extrapolate,
    )


@dataclass(frozen=True)
class BellowsModel:
    """Pressure response of one bellows unit.

    ``axial_curve`` maps gauge pressure to the free axial stroke;
    ``height_curve`` and ``width_curve`` are the parasitic strokes;
    ``force_curve`` maps pressure to the axial force the unit can exert
    (positive pushes, negative pulls).  The force curve extrapolates
    past the displacement operating range so force balances can report
    commanded pressures beyond it.
    """

    pressure_min: float
    pressure_max: float
    axial_curve: PiecewiseLinear
    height_curve: PiecewiseLinear
    width_curve: PiecewiseLinear
    force_curve: PiecewiseLinear

    def __post_init__(self) -> None:
        if self.pressure_min >= 0.0 or self.pressure_max <= 0.0:
            raise ParameterError("operating range must straddle ambient pressure")
        if abs(self.axial_curve(0.0)) > 1e-12:
            raise ParameterError("axial stroke at ambient pressure must be zero")
        ys = [y for _, y in self.axial_curve.points]
        if any(b <= a for a, b in zip(ys, ys[1:])):
            raise ParameterError("axial curve must be strictly increasing in pressure")
        for curve, limit, name in (
            (self.height_curve, HEIGHT_STROKE_MAX, "height"),
            (self.width_curve, WIDTH_STROKE_MAX, "width"),
        ):
            if any(abs(y) > limit + 1e-12 for _, y in curve.points):
                raise ParameterError(f"{name} stroke exceeds the characterised bound")

    def check_pressure(self, pressure: float) -> None:
        if not self.pressure_min <= pressure <= self.pressure_max:
            raise PressureRangeError(
                f"pressure {pressure:.1f} Pa outside operating range "
                f"[{self.pressure_min:.0f}, {self.pressure_max:.0f}]"
            )


@dataclass(frozen=True)
class StrutGeometry:
    """Constants of one scissor strut link.

    ``strut_length`` is the link length, ``base_offset`` the axial
    distance from tip pivot to strut base at ambient pressure, and
    ``hub_radius`` the radial offset of the strut base line from the
    robot axis.  ``hub_radius`` is an effective constant absorbing the
    simplifications of the single-link model; a small negative value is
    acceptable.
    """

    strut_length: float
    base_offset: float
    hub_radius: float

    def __post_init__(self) -> None:
        if self.strut_length <= 0.0:
            raise ParameterError("strut_length must be positive")
        if not 0.0 < abs(self.base_offset) < self.strut_length:
            raise ParameterError("base_offset must satisfy 0 < |offset| < strut_length")


@dataclass(frozen=True)
class ExpansionState:
    """Commanded pressure and resulting tip radius of each of the four units."""

    pressures: tuple[float, float, float, float]
    radii: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.pressures) != BELLOWS_UNITS or len(self.radii) != BELLOWS_UNITS:
            raise ParameterError(f"expansion state carries {BELLOWS_UNITS} units")
        if any(r <= 0.0 for r in self.radii):
            raise ParameterError("tip radii must be positive")


def bellows_displacement(
    pressure: float, model: BellowsModel
) -> tuple[float, float, float]:
    """Free strokes (axial, height, width) of one bellows at ``pressure``."""
    model.check_pressure(pressure)
    return (
        model.axial_curve(pressure),
        model.height_curve(pressure),
        model.width_curve(pressure),
    )


def _base_travel(pressure: float, geom: StrutGeometry, model: BellowsModel) -> float:
    """Axial distance from tip pivot to strut base at ``pressure``."""
    travel = geom.base_offset + model.axial_curve(pressure)
    if abs(travel) >= geom.strut_length:
        raise GeometryError(
            "strut base travel exceeds the strut length; geometry infeasible"
        )
    if travel <= 0.0:
        raise GeometryError("strut folded past the tip pivot; geometry infeasible")
    return travel


def _radial_reach(travel: float, geom: StrutGeometry) -> float:
    return math.sqrt(geom.strut_length**2 - travel**2)


def tip_diameter(pressure: float, geom: StrutGeometry, model: BellowsModel) -> float:
    """Tip diameter at ``pressure``: 2*(hub_radius + sqrt(L^2 - travel^2)).

    Strictly decreasing in pressure: vacuum pulls the strut base toward
    the tip pivot and swings the strut outward.
    """
    model.check_pressure(pressure)
    travel = _base_travel(pressure, geom, model)
    return 2.0 * (geom.hub_radius + _radial_reach(travel, geom))


def diameter_range(geom: StrutGeometry, model: BellowsModel) -> tuple[float, float]:
    """(smallest, largest) tip diameter achievable over the pressure range."""
    return (
        tip_diameter(model.pressure_max, geom, model),
        tip_diameter(model.pressure_min, geom, model),
    )


def pressure_for_diameter(
    target: float,
    geom: StrutGeometry,
    model: BellowsModel,
    tol: float = 1e-6,
) -> float:
    """Gauge pressure at which the free tip diameter equals ``target``.

    Monotone bisection to within ``tol`` meters of diameter.  The exact
    ambient anchor is preferred when it already satisfies the tolerance,
    so asking for the rest diameter returns exactly 0.0.
    """
    lo_d, hi_d = diameter_range(geom, model)
    if not lo_d - 1e-9 <= target <= hi_d + 1e-9:
        raise UnreachableDiameterError(
            f"diameter {target*1e3:.2f} mm outside achievable range "
            f"[{lo_d*1e3:.2f}, {hi_d*1e3:.2f}] mm"
        )
    if abs(tip_diameter(0.0, geom, model) - target) <= tol:
        return 0.0
    lo, hi = model.pressure_min, model.pressure_max  # diameter decreasing over [lo, hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d = tip_diameter(mid, geom, model)
        if abs(d - target) <= tol:
            return mid
        if d > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def strut_force_map(
    axial_force: float,
    pressure: float,
    geom: StrutGeometry,
    model: BellowsModel,
) -> tuple[float, float]:
    """Forces at the strut top for a bellows axial force magnitude.

    The strut is a two-force member: the contact force at its top runs
    along the link, magnitude ``axial_force * L / travel`` (this is the
    force a sensor normal to the strut top reads), and its radial
    component is ``axial_force * reach / travel``.  The radial component
    is the virtual-work conjugate of the tip radius: radial force times
    radius change equals axial force times base travel change.
    """
    if axial_force < 0.0:
        raise ParameterError("axial force magnitude must be non-negative")
    model.check_pressure(pressure)
    travel = _base_travel(pressure, geom, model)
    reach = _radial_reach(travel, geom)
    normal = axial_force * geom.strut_length / travel
    radial = axial_force * reach / travel
    return normal, radial


def axial_force_for_radial(
    radial_force: float,
    pressure: float,
    geom: StrutGeometry,
    model: BellowsModel,
) -> float:
    """Inverse of the radial leg of :func:`strut_force_map`."""
    if radial_force < 0.0:
        raise ParameterError("radial force magnitude must be non-negative")
    model.check_pressure(pressure)
    travel = _base_travel(pressure, geom, model)
    reach = _radial_reach(travel, geom)
    if reach <= 0.0:
        raise ForceInfeasibleError("strut fully folded; no radial transmission")
    return radial_force * travel / reach


def solve_strut_geometry(
    d_ambient: float = DIAMETER_AMBIENT,
    d_expanded: float = DIAMETER_EXPANDED,
    d_contracted: float = DIAMETER_CONTRACTED,
    axial_stroke_max: float = AXIAL_STROKE_MAX,
    pressure_min: float = PRESSURE_MIN,
    pressure_max: float = PRESSURE_MAX,
) -> StrutGeometry:
    """Strut constants from the three tip-diameter anchors, closed form.

    With a single-slope axial curve the strokes at the range ends are
    known, and writing reach = sqrt(L^2 - travel^2) at the three anchor
    pressures gives two radical equations that linearise after squaring
    (the ambient reach R0 cancels the quadratics).  Both reduce to
    straight lines a0(R0), whose intersection fixes the rest travel a0
    and ambient reach R0; L and the hub offset follow.
    """
    stroke_min = axial_stroke_max * pressure_min / pressure_max
    gain_contract = (d_ambient - d_contracted) / 2.0   # reach lost toward pressure_max
    gain_expand = (d_expanded - d_ambient) / 2.0       # reach gained toward pressure_min
    s, q = axial_stroke_max, stroke_min
    r0 = (
        (gain_contract**2 + s**2) / (2.0 * s)
        - (gain_expand**2 + q**2) / (2.0 * q)
    ) / (gain_contract / s + gain_expand / q)
    a0 = (2.0 * gain_contract * r0 - gain_contract**2 - s**2) / (2.0 * s)
    length = math.hypot(r0, a0)
    hub = d_ambient / 2.0 - r0
    return StrutGeometry(strut_length=length, base_offset=a0, hub_radius=hub)


def pin_force_scale(
    geom: StrutGeometry,
    peak_normal: float = PEAK_NORMAL_FORCE,
    pressure_min: float = PRESSURE_MIN,
    axial_stroke_max: float = AXIAL_STROKE_MAX,
    pressure_max: float = PRESSURE_MAX,
) -> float:
    """Force-curve slope (N/Pa) pinned by the measured peak normal force.

    The strut-top normal force peaks at full vacuum on the expansion
    branch (both the bellows pull and the lever ratio grow toward
    ``pressure_min``), so the slope follows from
    ``peak_normal = slope * |pressure_min| * L / travel(pressure_min)``.
    """
    travel_min = geom.base_offset + axial_stroke_max * pressure_min / pressure_max
    return peak_normal * travel_min / (geom.strut_length * abs(pressure_min))


def default_strut_geometry() -> StrutGeometry:
    """Strut constants solved from the shipped characterisation anchors."""
    return solve_strut_geometry()


def default_bellows_model(geom: StrutGeometry | None = None) -> BellowsModel:
    """Bellows curves through the shipped characterisation anchors.

    Displacement curves are single-slope lines through the ambient zero
    and the measured peak strokes.  The force curve slope is pinned so
    the peak strut-top normal force over the expansion branch matches
    the measured 3.89 N, which requires the strut geometry (defaults to
    :func:`default_strut_geometry`).
    """
    if geom is None:
        geom = default_strut_geometry()
    force_slope = pin_force_scale(geom)
    force_curve = PiecewiseLinear(
        points=(
            (PRESSURE_MIN, force_slope * PRESSURE_MIN),
            (0.0, 0.0),
            (PRESSURE_MAX, force_slope * PRESSURE_MAX),
        ),
        extrapolate=True,
    )
    return BellowsModel(
        pressure_min=PRESSURE_MIN,
        pressure_max=PRESSURE_MAX,
        axial_curve=_line_through_zero(PRESSURE_MAX, AXIAL_STROKE_MAX, PRESSURE_MIN),
        height_curve=_line_through_zero(PRESSURE_MAX, HEIGHT_STROKE_MAX, PRESSURE_MIN),
        width_curve=_line_through_zero(PRESSURE_MAX, WIDTH_STROKE_MAX, PRESSURE_MIN),
        force_curve=force_curve,
    )


def uniform_expansion_state(
    pressure: float, geom: StrutGeometry, model: BellowsModel
) -> ExpansionState:
    """All four units at the same pressure (symmetric, non-steering control)."""
    radius = tip_diameter(pressure, geom, model) / 2.0
    return ExpansionState(
        pressures=(pressure,) * BELLOWS_UNITS,
        radii=(radius,) * BELLOWS_UNITS,
    )
