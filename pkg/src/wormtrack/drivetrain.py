"""Worm-to-track power transmission statics.

A single worm, spun through a flexible shaft by an external motor,
meshes the toothed inner faces of four tracks wrapped around the robot
body.  This module holds the pure statics of that coupling: thread
pitch angle, the thrust/torque relation across the mesh, a linear
torque-speed motor curve, and the two velocity chains (tooth-ratio
based and lead-screw based) used to predict crawl speed.

All functions are pure and total over valid parameter sets.  Negative
thrust (input torque below the friction offset) is returned as-is;
interpreting it as a stall is the simulation engine's job.

Units are SI throughout, except where a signature says RPM explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import MotorSpeedError, ParameterError
from .units import RPM_TO_RAD_S


@dataclass(frozen=True)
class DriveTrainParams:
    """Geometry and friction constants of the worm-track drive.

    Defaults describe the desk-scale prototype: four tracks, a 28 mm
    worm with 3 mm thread pitch and 5 teeth, meshing 34-tooth tracks on
    a 140 mm body.
    """

    track_count: int = 4
    wall_friction: float = 0.3        # track <-> pipe wall, fallback when no surface given
    worm_friction: float = 0.2        # worm <-> track teeth
    track_stiffness: float = 200.0    # radial equivalent elastic modulus per track, N/m
    track_diameter: float = 0.140     # relaxed outer diameter of the track set, m
    worm_diameter: float = 0.028      # m
    pitch: float = 0.003              # axial distance between worm threads, m
    worm_teeth: int = 5
    track_teeth: int = 34
    friction_torque: float = 0.01     # reaction torque offset of the mesh, N*m

    def __post_init__(self) -> None:
        if self.track_count < 1:
            raise ParameterError("track_count must be at least 1")
        for name in ("track_stiffness", "track_diameter", "worm_diameter", "pitch"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be positive")
        for name in ("wall_friction", "worm_friction", "friction_torque"):
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be non-negative")
        if self.worm_teeth < 1 or self.track_teeth < 1:
            raise ParameterError("tooth counts must be at least 1")
        # Thrust relation needs pi*d > mu*p, otherwise the mesh cannot
        # convert torque into forward thrust at all.
        if math.pi * self.worm_diameter <= self.worm_friction * self.pitch:
            raise ParameterError(
                "worm_diameter too small for the friction/pitch combination "
                "(requires pi*worm_diameter > worm_friction*pitch)"
            )

    @property
    def gear_ratio(self) -> float:
        """Speed reduction from worm surface to track surface, worm_teeth/track_teeth."""
        return self.worm_teeth / self.track_teeth


@dataclass(frozen=True)
class MotorCurve:
    """Linear torque-speed model: torque falls from stall to zero at no-load speed."""

    no_load_speed: float = 20.0 * math.pi  # rad/s (600 RPM)
    stall_torque: float = 0.4              # N*m

    def __post_init__(self) -> None:
        if self.no_load_speed <= 0.0:
            raise ParameterError("no_load_speed must be positive")
        if self.stall_torque <= 0.0:
            raise ParameterError("stall_torque must be positive")


def pitch_angle(params: DriveTrainParams) -> float:
    """Thread inclination of the worm, atan(p / (pi*d)), in radians.

    Strictly positive and below pi/2 for any valid parameter set.
    """
    return math.atan(params.pitch / (math.pi * params.worm_diameter))


def thrust_from_torque(torque: float, params: DriveTrainParams) -> float:
    """Axial thrust delivered by the mesh for a given input torque.

        F = 2 (pi d - mu p) (T - T0) / (d (mu pi d + p))

    with d the worm diameter, p the pitch, mu the worm-track friction
    coefficient and T0 the reaction torque offset.  Affine in T with a
    positive slope; negative results mean the torque cannot overcome
    the offset (the engine treats that as a stall).
    """
    d = params.worm_diameter
    p = params.pitch
    mu = params.worm_friction
    return (
        2.0 * (math.pi * d - mu * p) * (torque - params.friction_torque)
        / (d * (mu * math.pi * d + p))
    )


def max_thrust(params: DriveTrainParams, motor: MotorCurve) -> float:
    """Thrust at stall torque: the most the drive can ever push."""
    return thrust_from_torque(motor.stall_torque, params)


def motor_torque_at_speed(omega: float, motor: MotorCurve) -> float:
    """Torque available at rotation speed ``omega`` (rad/s).

    Linear between stall torque at rest and zero at the no-load speed.
    Raises :class:`MotorSpeedError` above the no-load speed.
    """
    if omega < 0.0:
        raise MotorSpeedError("rotation speed must be non-negative")
    if omega > motor.no_load_speed:
        raise MotorSpeedError(
            f"commanded speed {omega:.3f} rad/s exceeds no-load speed "
            f"{motor.no_load_speed:.3f} rad/s"
        )
    return motor.stall_torque * (1.0 - omega / motor.no_load_speed)


def worm_tangential_speed(rpm: float, params: DriveTrainParams) -> float:
    """Surface speed of the worm thread, pi*d*n/60, in m/s for n in RPM."""
    if rpm < 0.0:
        raise ParameterError("rotation speed must be non-negative")
    return math.pi * params.worm_diameter * rpm / 60.0


def robot_velocity_gear(rpm: float, params: DriveTrainParams) -> float:
    """Crawl speed through the tooth-ratio chain (the canonical model).

    Worm surface speed scaled by the worm/track tooth ratio.  This is
    the frictionless ceiling; measured speeds sit below it.
    """
    return params.gear_ratio * worm_tangential_speed(rpm, params)


def robot_velocity_lead(omega: float, params: DriveTrainParams) -> float:
    """Crawl speed through the lead-screw chain: one pitch per worm turn.

    Takes ``omega`` in rad/s and returns omega*p/(2*pi).  Kept as a
    selectable alternative to :func:`robot_velocity_gear` for studies;
    it predicts far lower speeds than measured hardware reaches.
    """
    if omega < 0.0:
        raise ParameterError("rotation speed must be non-negative")
    return omega * params.pitch / (2.0 * math.pi)


def worm_force_decomposition(
    normal_force: float,
    params: DriveTrainParams,
    printed_sign: bool = False,
) -> tuple[float, float]:
    """Split the tooth-contact normal force into thrust and input torque.

    For contact normal force N on the thread flank at pitch angle theta:

        thrust = N (cos theta - mu sin theta)
        torque = (d/2) N (sin theta + mu cos theta) + T0

    The ``+mu cos theta`` sign in the torque term is the one consistent
    with :func:`thrust_from_torque`: eliminating N and theta reproduces
    that relation identically.  ``printed_sign=True`` selects the
    ``-mu cos theta`` variant sometimes quoted for this mechanism; it is
    inconsistent with the thrust/torque relation whenever mu > 0 and is
    kept only for comparison studies.
    """
    if normal_force < 0.0:
        raise ParameterError("normal force must be non-negative")
    theta = pitch_angle(params)
    mu = params.worm_friction
    sign = -1.0 if printed_sign else 1.0
    thrust = normal_force * (math.cos(theta) - mu * math.sin(theta))
    torque = (
        params.worm_diameter / 2.0
        * normal_force
        * (math.sin(theta) + sign * mu * math.cos(theta))
        + params.friction_torque
    )
    return thrust, torque


def rpm_at_torque(torque: float, motor: MotorCurve) -> float:
    """Rotation speed (RPM) the motor settles at for a torque demand."""
    if not 0.0 <= torque <= motor.stall_torque:
        raise MotorSpeedError("torque demand outside the motor curve")
    omega = motor.no_load_speed * (1.0 - torque / motor.stall_torque)
    return omega / RPM_TO_RAD_S
