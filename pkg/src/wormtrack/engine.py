"""Quasi-static locomotion engine.

Each step is a static equilibrium: look up the local pipe diameter and
surface, let the adaptation controller pick a bellows pressure, evaluate
traction capacity and drive thrust at the commanded motor speed, then
either advance at the effective crawl rate or hold position stalled.
There is no inertia; prototype speeds are centimetres per second.

Slip is modelled as a transmission efficiency that is flat up to a knee
speed and decays exponentially beyond it.  The hardware shows this drop
(flexible-shaft losses and worm-track slippage at high RPM) without
separating the two causes, so one lumped knob covers both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from statistics import fmean

from .contact import (
    BRACKET_VERBATIM,
    PipeProfile,
    SurfaceSpec,
    pipe_diameter_at,
    surface,
    traction_capacity,
    uniform_profile,
    with_surface,
)
from .drivetrain import (
    DriveTrainParams,
    MotorCurve,
    motor_torque_at_speed,
    robot_velocity_gear,
    robot_velocity_lead,
    thrust_from_torque,
)
from .errors import ForceInfeasibleError, ParameterError
from .expansion import (
    BELLOWS_UNITS,
    BellowsModel,
    ExpansionState,
    StrutGeometry,
    axial_force_for_radial,
    diameter_range,
    pressure_for_diameter,
    uniform_expansion_state,
)
from .units import rpm_to_rad_s


@dataclass(frozen=True)
class SlipModel:
    """Transmission efficiency versus motor speed.

    Constant ``base_efficiency`` up to ``knee_speed`` (rad/s), then an
    exponential falloff with rate ``decay`` (per rad/s).  The default
    knee sits above the usual command range, so an uncalibrated model
    behaves like the pure analytic chain.
    """

    base_efficiency: float = 1.0
    knee_speed: float = rpm_to_rad_s(320.0)
    decay: float = 0.04

    def __post_init__(self) -> None:
        if not 0.0 < self.base_efficiency <= 1.0:
            raise ParameterError("base_efficiency must be in (0, 1]")
        if self.knee_speed < 0.0:
            raise ParameterError("knee_speed must be non-negative")
        if self.decay <= 0.0:
            raise ParameterError("decay must be positive")


def efficiency(omega: float, slip: SlipModel) -> float:
    """Transmission efficiency at motor speed ``omega`` (rad/s)."""
    if omega < 0.0:
        raise ParameterError("rotation speed must be non-negative")
    if omega <= slip.knee_speed:
        return slip.base_efficiency
    return slip.base_efficiency * math.exp(-slip.decay * (omega - slip.knee_speed))


@dataclass(frozen=True)
class Resistance:
    """External loads on the tip.

    ``tether_drag`` opposes motion along the pipe axis.  ``weight_load``
    is the tip weight the expansion units must carry in a horizontal
    pipe; it enters the pressure balance radially, not the axial stall
    check.
    """

    tether_drag: float = 0.0
    weight_load: float = 0.0

    def __post_init__(self) -> None:
        if self.tether_drag < 0.0 or self.weight_load < 0.0:
            raise ParameterError("resistance loads must be non-negative")


@dataclass(frozen=True)
class RobotState:
    position: float
    rpm: float
    expansion: ExpansionState
    stalled: bool = False


@dataclass(frozen=True)
class StepRecord:
    """One trace row, matching the CSV schema column for column."""

    time: float
    position: float
    pipe_diameter: float
    pressure: float
    normal_force: float
    thrust: float
    capacity: float
    velocity: float
    stalled: bool


VELOCITY_GEAR = "gear"
VELOCITY_LEAD = "lead"


@dataclass(frozen=True)
class SimulationConfig:
    drivetrain: DriveTrainParams
    motor: MotorCurve
    geometry: StrutGeometry
    bellows: BellowsModel
    profile: PipeProfile
    slip: SlipModel
    resistance: Resistance = Resistance()
    rpm: float = 300.0
    normal_force_target: float = 1.0   # per-track wall preload the controller sustains, N
    velocity_model: str = VELOCITY_GEAR
    bracket: str = BRACKET_VERBATIM
    dt: float = 0.01
    max_steps: int = 200_000
    stall_timeout: float = 1.0

    def __post_init__(self) -> None:
        if self.rpm < 0.0:
            raise ParameterError("rpm must be non-negative")
        if rpm_to_rad_s(self.rpm) > self.motor.no_load_speed:
            raise ParameterError("commanded rpm exceeds the motor no-load speed")
        if self.normal_force_target < 0.0:
            raise ParameterError("normal_force_target must be non-negative")
        if self.velocity_model not in (VELOCITY_GEAR, VELOCITY_LEAD):
            raise ParameterError(f"unknown velocity model {self.velocity_model!r}")
        if self.dt <= 0.0:
            raise ParameterError("dt must be positive")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be at least 1")
        if self.stall_timeout <= 0.0:
            raise ParameterError("stall_timeout must be positive")


def required_pressure(
    lumen_diameter: float,
    normal_target: float,
    resistance: Resistance,
    geom: StrutGeometry,
    model: BellowsModel,
    pressure_tol: float = 0.01,
) -> float:
    """Pressure that matches the tip to ``lumen_diameter`` and carries the load.

    Starts from the free-shape pressure for that diameter, then adds the
    correction needed for the strut force balance to supply the wall
    preload plus the per-unit share of the tip weight, found by bisecting
    the force curve against the strut transmission.  The hardware needs
    extra positive pressure to hold traction in constrained pipes, so the
    correction is applied toward positive pressure; commanded values may
    exceed the displacement characterisation range and are reported as-is.
    """
    if normal_target < 0.0:
        raise ParameterError("normal force target must be non-negative")
    base = pressure_for_diameter(lumen_diameter, geom, model)
    need = normal_target + resistance.weight_load / BELLOWS_UNITS
    if need <= 0.0:
        return base
    need_axial = axial_force_for_radial(need, base, geom, model)
    base_force = model.force_curve(base)

    def surplus(pressure: float) -> float:
        return model.force_curve(pressure) - base_force - need_axial

    span = model.pressure_max - model.pressure_min
    ceiling = model.pressure_max + 2.0 * span
    if surplus(ceiling) < 0.0:
        raise ForceInfeasibleError(
            f"normal force target {normal_target:.2f} N per track is beyond the "
            "expansion unit's force range at this diameter"
        )
    lo, hi = base, ceiling
    while hi - lo > pressure_tol:
        mid = 0.5 * (lo + hi)
        if surplus(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


@lru_cache(maxsize=1024)
def _controller_pressure(
    target_diameter: float,
    normal_target: float,
    resistance: Resistance,
    geom: StrutGeometry,
    model: BellowsModel,
) -> float:
    return required_pressure(target_diameter, normal_target, resistance, geom, model)


def _crawl_rate(config: SimulationConfig) -> float:
    if config.velocity_model == VELOCITY_LEAD:
        return robot_velocity_lead(rpm_to_rad_s(config.rpm), config.drivetrain)
    return robot_velocity_gear(config.rpm, config.drivetrain)


def initial_state(config: SimulationConfig) -> RobotState:
    lo_d, hi_d = diameter_range(config.geometry, config.bellows)
    lumen, _ = pipe_diameter_at(config.profile, 0.0)
    target = min(max(lumen, lo_d), hi_d)
    pressure = _controller_pressure(
        target, config.normal_force_target, config.resistance,
        config.geometry, config.bellows,
    )
    return RobotState(
        position=0.0,
        rpm=config.rpm,
        expansion=uniform_expansion_state(
            min(max(pressure, config.bellows.pressure_min), config.bellows.pressure_max),
            config.geometry, config.bellows,
        ),
        stalled=False,
    )


def step(
    state: RobotState,
    dt: float,
    config: SimulationConfig,
    time: float = 0.0,
) -> tuple[RobotState, StepRecord]:
    """Advance one quasi-static step; deterministic for identical inputs."""
    if dt <= 0.0:
        raise ParameterError("dt must be positive")
    profile = config.profile
    lumen, surf = pipe_diameter_at(profile, state.position)

    lo_d, hi_d = diameter_range(config.geometry, config.bellows)
    target_d = min(max(lumen, lo_d), hi_d)
    pressure = _controller_pressure(
        target_d, config.normal_force_target, config.resistance,
        config.geometry, config.bellows,
    )
    per_track_normal = (
        config.normal_force_target + config.resistance.weight_load / BELLOWS_UNITS
    )

    capacity = traction_capacity(
        target_d, lumen, config.drivetrain, surf, config.bracket
    )
    omega = rpm_to_rad_s(state.rpm)
    torque = motor_torque_at_speed(omega, config.motor)
    raw_thrust = thrust_from_torque(torque, config.drivetrain)
    eta = efficiency(omega, config.slip)
    effective = eta * min(raw_thrust, capacity) if raw_thrust > 0.0 else 0.0

    stalled = (
        capacity <= 0.0
        or raw_thrust <= 0.0
        or effective < config.resistance.tether_drag
    )
    rate = 0.0 if stalled else eta * _crawl_rate(config)
    advance = min(rate * dt, profile.length - state.position)

    geometry_pressure = min(
        max(pressure, config.bellows.pressure_min), config.bellows.pressure_max
    )
    new_state = replace(
        state,
        position=state.position + advance,
        stalled=stalled,
        expansion=uniform_expansion_state(
            geometry_pressure, config.geometry, config.bellows
        ),
    )
    record = StepRecord(
        time=time + dt,
        position=new_state.position,
        pipe_diameter=lumen,
        pressure=pressure,
        normal_force=per_track_normal,
        thrust=effective,
        capacity=capacity,
        velocity=rate,
        stalled=stalled,
    )
    return new_state, record


def run(config: SimulationConfig) -> list[StepRecord]:
    """Step until the profile end, a persistent stall, or the step cap.

    A zero-length profile yields an empty trace.  The final step clamps
    to the profile end, so the trace endpoint does not depend on dt.
    """
    trace: list[StepRecord] = []
    state = initial_state(config)
    stalled_for = 0.0
    end_guard = config.profile.length - 1e-12
    for i in range(config.max_steps):
        if state.position >= end_guard:
            break
        state, record = step(state, config.dt, config, time=i * config.dt)
        trace.append(record)
        if record.stalled:
            stalled_for += config.dt
            if stalled_for > config.stall_timeout:
                break
        else:
            stalled_for = 0.0
    return trace


def mean_velocity(trace: list[StepRecord]) -> float:
    if not trace:
        return 0.0
    return fmean(r.velocity for r in trace)


def peak_thrust(trace: list[StepRecord]) -> float:
    if not trace:
        return 0.0
    return max(r.thrust for r in trace)


@dataclass(frozen=True)
class RpmSweepRow:
    rpm: float
    surface_name: str
    mean_velocity: float
    peak_thrust: float


@dataclass(frozen=True)
class DiameterSweepRow:
    diameter: float
    inside_pressure: float
    outside_pressure: float
    peak_thrust: float


DEFAULT_SWEEP_SURFACES = ("smooth", "tissue", "foam")


def sweep_rpm(
    config: SimulationConfig,
    rpm_list: list[float],
    surfaces: tuple[str, ...] = DEFAULT_SWEEP_SURFACES,
) -> list[RpmSweepRow]:
    """One run per (rpm, surface) pair over the config's profile.

    Runs are independent (no shared mutable state) so they could be
    dispatched in parallel; rows are emitted in input order regardless.
    """
    if not rpm_list:
        raise ParameterError("rpm_list must not be empty")
    rows = []
    for rpm in rpm_list:
        for name in surfaces:
            cfg = replace(
                config,
                rpm=rpm,
                profile=with_surface(config.profile, surface(name)),
            )
            trace = run(cfg)
            rows.append(
                RpmSweepRow(
                    rpm=rpm,
                    surface_name=name,
                    mean_velocity=mean_velocity(trace),
                    peak_thrust=peak_thrust(trace),
                )
            )
    return rows


def sweep_diameter(
    config: SimulationConfig,
    diameters: list[float],
) -> list[DiameterSweepRow]:
    """Uniform-pipe runs at each diameter, with the pressure split.

    ``outside_pressure`` is the free-shape pressure for the diameter;
    ``inside_pressure`` additionally carries the force balance (wall
    preload and tip weight).  Diameters must be achievable by the tip.
    """
    if not diameters:
        raise ParameterError("diameters must not be empty")
    lo_d, hi_d = diameter_range(config.geometry, config.bellows)
    surf = config.profile.stations[0].surface
    rows = []
    for diameter in diameters:
        if not lo_d - 1e-9 <= diameter <= hi_d + 1e-9:
            raise ParameterError(
                f"diameter {diameter*1e3:.1f} mm outside the achievable tip range "
                f"[{lo_d*1e3:.1f}, {hi_d*1e3:.1f}] mm"
            )
        outside = pressure_for_diameter(diameter, config.geometry, config.bellows)
        inside = required_pressure(
            diameter, config.normal_force_target, config.resistance,
            config.geometry, config.bellows,
        )
        cfg = replace(
            config,
            profile=uniform_profile(diameter, config.profile.length, surf),
        )
        trace = run(cfg)
        rows.append(
            DiameterSweepRow(
                diameter=diameter,
                inside_pressure=inside,
                outside_pressure=outside,
                peak_thrust=peak_thrust(trace),
            )
        )
    return rows
