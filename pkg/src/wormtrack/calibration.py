"""Calibration of the model's free constants against measured anchors.

The desk prototype's characterisation report provides a small set of
text-anchored scalar measurements (pressure range, strokes, peak
forces, speeds, tip diameters).  They ship here as a versioned,
append-only dataset; figure-only curves are not tabulated, so users may
digitise and append their own rows through the dataset file without
touching code.

Fits are bounded derivative-free searches (Nelder-Mead): the simulation
contains clamps (traction capacity, stall) that make objectives only
piecewise-smooth.  Everything is deterministic and seed-free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable

from scipy.optimize import minimize

from .contact import surface, uniform_profile
from .drivetrain import DriveTrainParams, MotorCurve
from .engine import (
    SimulationConfig,
    SlipModel,
    mean_velocity,
    peak_thrust,
    run,
)
from .errors import GeometryError, ParameterError, PressureRangeError
from .expansion import (
    AXIAL_STROKE_MAX,
    BellowsModel,
    HEIGHT_STROKE_MAX,
    PEAK_NORMAL_FORCE,
    PRESSURE_MAX,
    PRESSURE_MIN,
    PiecewiseLinear,
    StrutGeometry,
    WIDTH_STROKE_MAX,
    default_bellows_model,
    default_strut_geometry,
    tip_diameter,
)
from .units import RPM_TO_RAD_S, rad_s_to_rpm, rpm_to_rad_s

DATASET_HEADER = "quantity,condition,value,unit,citation"

# unit symbol accepted in dataset files -> (SI label, factor to SI)
_DATASET_UNITS = {
    "m": ("m", 1.0),
    "cm": ("m", 1e-2),
    "mm": ("m", 1e-3),
    "m/s": ("m/s", 1.0),
    "mm/s": ("m/s", 1e-3),
    "pa": ("pa", 1.0),
    "kpa": ("pa", 1e3),
    "mbar": ("pa", 100.0),
    "n": ("n", 1.0),
    "nm": ("nm", 1.0),
    "rad/s": ("rad/s", 1.0),
    "rpm": ("rad/s", RPM_TO_RAD_S),
    "s": ("s", 1.0),
    "kg": ("kg", 1.0),
    "": ("", 1.0),
}

# Residual tolerance per anchor quantity: relative where the report
# states repeat counts (ten repeats for bench anchors, five for runs),
# absolute 1 mm for the tip-diameter geometry anchors.
_TOLERANCES: dict[str, tuple[str, float]] = {
    "linear_speed": ("rel", 0.05),
    "peak_force": ("rel", 0.10),
    "tip_diameter": ("abs", 1e-3),
    "bellows_displacement": ("rel", 0.05),
    "bellows_force": ("rel", 0.05),
}
_DEFAULT_TOLERANCE = ("rel", 0.05)


@dataclass(frozen=True)
class AnchorRecord:
    """One measured anchor: what, under which condition, value, source."""

    quantity: str
    condition: str
    value: float
    unit: str
    citation: str

    def __post_init__(self) -> None:
        if not self.citation:
            raise ParameterError("anchor records must cite a source location")
        for field_name in ("quantity", "condition", "unit", "citation"):
            if "," in getattr(self, field_name):
                raise ParameterError(f"dataset field {field_name} must not contain commas")

    @property
    def label(self) -> str:
        return f"{self.quantity}/{self.condition}"

    def tolerance(self) -> float:
        mode, tol = _TOLERANCES.get(self.quantity, _DEFAULT_TOLERANCE)
        if mode == "abs":
            return tol
        return tol * abs(self.value)


@dataclass(frozen=True)
class ReferenceDataset:
    records: tuple[AnchorRecord, ...]

    def filter(self, quantity: str | None = None, condition_prefix: str | None = None) -> tuple[AnchorRecord, ...]:
        out = self.records
        if quantity is not None:
            out = tuple(r for r in out if r.quantity == quantity)
        if condition_prefix is not None:
            out = tuple(r for r in out if r.condition.startswith(condition_prefix))
        return out

    def value(self, quantity: str, condition: str) -> float:
        for r in self.records:
            if r.quantity == quantity and r.condition == condition:
                return r.value
        raise KeyError(f"no anchor {quantity}/{condition}")

    def appended(self, extra: Iterable[AnchorRecord]) -> "ReferenceDataset":
        return ReferenceDataset(records=self.records + tuple(extra))


def builtin_reference_dataset() -> ReferenceDataset:
    """The shipped measurement anchors, all values SI."""
    rec = AnchorRecord
    rpm = rpm_to_rad_s
    records = (
        rec("pressure_range", "min", PRESSURE_MIN, "pa", "sec. 3.1"),
        rec("pressure_range", "max", PRESSURE_MAX, "pa", "sec. 3.1"),
        rec("bellows_displacement", "axial_max", AXIAL_STROKE_MAX, "m", "sec. 3.1"),
        rec("bellows_displacement", "height_max", HEIGHT_STROKE_MAX, "m", "fig. 6c"),
        rec("bellows_displacement", "width_max", WIDTH_STROKE_MAX, "m", "fig. 6c"),
        rec("bellows_force", "normal_peak", PEAK_NORMAL_FORCE, "n", "sec. 3.1"),
        rec("tip_diameter", "at_pressure_min", 0.1516, "m", "sec. 3.1"),
        rec("tip_diameter", "ambient", 0.140, "m", "sec. 3.1 / table 2"),
        rec("tip_diameter", "at_pressure_max", 0.0996, "m", "sec. 3.1"),
        rec("linear_speed", "smooth@300rpm", 0.03204, "m/s", "sec. 3.2.1"),
        rec("linear_speed", "tissue@300rpm", 0.02929, "m/s", "sec. 3.2.1"),
        rec("peak_force", "smooth", 1.47, "n", "sec. 3.2.2"),
        rec("peak_force", "tissue", 2.83, "n", "sec. 3.2.2"),
        rec("peak_force", "foam", 3.61, "n", "sec. 3.2.2"),
        rec("test_rpm", "grid_1", rpm(75.0), "rad/s", "fig. 8"),
        rec("test_rpm", "grid_2", rpm(120.0), "rad/s", "fig. 8"),
        rec("test_rpm", "grid_3", rpm(150.0), "rad/s", "fig. 8"),
        rec("test_rpm", "grid_4", rpm(200.0), "rad/s", "fig. 8"),
        rec("test_rpm", "grid_5", rpm(300.0), "rad/s", "fig. 8"),
        rec("test_tube", "tube_1", 0.10, "m", "sec. 3.2.3"),
        rec("test_tube", "tube_2", 0.12, "m", "sec. 3.2.3"),
        rec("test_tube", "tube_3", 0.14, "m", "sec. 3.2.3"),
        rec("test_tube", "tube_4", 0.15, "m", "sec. 3.2.3"),
        rec("peak_rpm_band", "low", rpm(150.0), "rad/s", "sec. 3.2.3"),
        rec("peak_rpm_band", "high", rpm(200.0), "rad/s", "sec. 3.2.3"),
    )
    return ReferenceDataset(records=records)


def dataset_to_csv(dataset: ReferenceDataset) -> str:
    lines = [DATASET_HEADER]
    for r in dataset.records:
        lines.append(f"{r.quantity},{r.condition},{r.value!r},{r.unit},{r.citation}")
    return "\n".join(lines) + "\n"


def dataset_from_csv(text: str) -> ReferenceDataset:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != DATASET_HEADER:
        raise ParameterError(f"dataset file must start with header '{DATASET_HEADER}'")
    records = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ParameterError(f"dataset line {i}: expected 5 comma-separated fields")
        quantity, condition, raw_value, unit, citation = (p.strip() for p in parts)
        key = unit.lower()
        if key not in _DATASET_UNITS:
            raise ParameterError(f"dataset line {i}: unknown unit {unit!r}")
        si_label, factor = _DATASET_UNITS[key]
        records.append(
            AnchorRecord(quantity, condition, float(raw_value) * factor, si_label, citation)
        )
    return ReferenceDataset(records=tuple(records))


def save_dataset(dataset: ReferenceDataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_csv(dataset))


def load_dataset(path: str) -> ReferenceDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return dataset_from_csv(fh.read())


@dataclass(frozen=True)
class FitResult:
    param_names: tuple[str, ...]
    values: dict[str, float]
    rss: float
    residuals: tuple[tuple[str, float], ...]
    converged: bool
    evaluations: int
    message: str


Predictor = Callable[[dict[str, float], AnchorRecord], "float | None"]

_PENALTY = 1e12


def fit(
    param_names: list[str],
    dataset: ReferenceDataset,
    initial: dict[str, float],
    bounds: dict[str, tuple[float, float]],
    predictor: Predictor,
    max_iter: int = 2000,
) -> FitResult:
    """Least-squares fit of ``param_names`` to the anchors a predictor models.

    ``predictor(values, record)`` returns the model's prediction for one
    anchor record, or None when the record is outside its scope.
    Residuals are scaled by each anchor's tolerance inside the search
    objective; the reported RSS is unscaled.  With an empty parameter
    list no search runs and the result reports the current residuals.
    The search is a bounded Nelder-Mead simplex, deterministic for
    identical inputs.
    """
    for name in param_names:
        if name not in initial:
            raise ParameterError(f"missing initial guess for {name!r}")
        if name not in bounds:
            raise ParameterError(f"missing bounds for {name!r}")
        lo, hi = bounds[name]
        if not (lo < hi and lo == lo and hi == hi and abs(lo) < float("inf") and abs(hi) < float("inf")):
            raise ParameterError(f"bounds for {name!r} must be finite and ordered")
    if len(param_names) > 4:
        raise ParameterError("fit supports at most 4 simultaneous parameters")

    applicable = [
        r for r in dataset.records if predictor(dict(initial), r) is not None
    ]
    if not applicable:
        raise ParameterError("predictor models none of the dataset records")

    evaluations = 0

    def residuals_at(values: dict[str, float]) -> list[tuple[AnchorRecord, float]]:
        out = []
        for record in applicable:
            pred = predictor(values, record)
            if pred is None:
                raise ParameterError("predictor scope changed during the fit")
            out.append((record, pred - record.value))
        return out

    def objective(x) -> float:
        nonlocal evaluations
        evaluations += 1
        values = dict(initial)
        values.update(zip(param_names, x))
        try:
            res = residuals_at(values)
        except (GeometryError, ParameterError, PressureRangeError, ValueError):
            return _PENALTY
        return sum((r / rec.tolerance()) ** 2 for rec, r in res)

    if param_names:
        x0 = [initial[n] for n in param_names]
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=[bounds[n] for n in param_names],
            options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-14},
        )
        fitted = dict(initial)
        fitted.update(zip(param_names, result.x))
        search_ok = bool(result.success)
        message = str(result.message)
    else:
        fitted = dict(initial)
        search_ok = True
        message = "no parameters to fit; residuals evaluated as-is"

    final = residuals_at(fitted)
    rss = sum(r * r for _, r in final)
    within = all(abs(r) <= rec.tolerance() for rec, r in final)
    return FitResult(
        param_names=tuple(param_names),
        values=fitted,
        rss=rss,
        residuals=tuple((rec.label, r) for rec, r in final),
        converged=search_ok and within,
        evaluations=evaluations,
        message=message,
    )


def _displacement_only_bellows() -> BellowsModel:
    """Bellows with a unit force slope, for fits that only need strokes."""
    axial = PiecewiseLinear(
        points=(
            (PRESSURE_MIN, AXIAL_STROKE_MAX * PRESSURE_MIN / PRESSURE_MAX),
            (0.0, 0.0),
            (PRESSURE_MAX, AXIAL_STROKE_MAX),
        )
    )
    return BellowsModel(
        pressure_min=PRESSURE_MIN,
        pressure_max=PRESSURE_MAX,
        axial_curve=axial,
        height_curve=PiecewiseLinear(
            points=(
                (PRESSURE_MIN, HEIGHT_STROKE_MAX * PRESSURE_MIN / PRESSURE_MAX),
                (0.0, 0.0),
                (PRESSURE_MAX, HEIGHT_STROKE_MAX),
            )
        ),
        width_curve=PiecewiseLinear(
            points=(
                (PRESSURE_MIN, WIDTH_STROKE_MAX * PRESSURE_MIN / PRESSURE_MAX),
                (0.0, 0.0),
                (PRESSURE_MAX, WIDTH_STROKE_MAX),
            )
        ),
        force_curve=PiecewiseLinear(
            points=((PRESSURE_MIN, PRESSURE_MIN), (0.0, 0.0), (PRESSURE_MAX, PRESSURE_MAX)),
            extrapolate=True,
        ),
    )


# Anchor pressures keyed by the tip-diameter record conditions.
_TIP_ANCHOR_PRESSURES = {
    "at_pressure_min": PRESSURE_MIN,
    "ambient": 0.0,
    "at_pressure_max": PRESSURE_MAX,
}


def fit_strut_geometry(
    dataset: ReferenceDataset | None = None,
    initial: dict[str, float] | None = None,
) -> tuple[StrutGeometry, FitResult]:
    """Fit the three strut constants to the three tip-diameter anchors.

    Independent check of :func:`wormtrack.expansion.solve_strut_geometry`:
    same anchors, found by search instead of algebra.
    """
    if dataset is None:
        dataset = builtin_reference_dataset()
    bellows = _displacement_only_bellows()
    if initial is None:
        initial = {"strut_length": 0.15, "base_offset": 0.12, "hub_radius": 0.01}
    bounds = {
        "strut_length": (0.02, 0.5),
        "base_offset": (0.01, 0.45),
        "hub_radius": (-0.05, 0.05),
    }

    def predictor(values: dict[str, float], record: AnchorRecord) -> float | None:
        if record.quantity != "tip_diameter":
            return None
        pressure = _TIP_ANCHOR_PRESSURES.get(record.condition)
        if pressure is None:
            return None
        geom = StrutGeometry(
            strut_length=values["strut_length"],
            base_offset=values["base_offset"],
            hub_radius=values["hub_radius"],
        )
        return tip_diameter(pressure, geom, bellows)

    result = fit(
        ["strut_length", "base_offset", "hub_radius"],
        dataset,
        initial,
        bounds,
        predictor,
        max_iter=4000,
    )
    geom = StrutGeometry(
        strut_length=result.values["strut_length"],
        base_offset=result.values["base_offset"],
        hub_radius=result.values["hub_radius"],
    )
    return geom, result


_SPEED_CONDITION = re.compile(r"^(?P<surface>[a-z]+)@(?P<rpm>\d+(?:\.\d+)?)rpm$")


def calibration_scenario(
    drivetrain: DriveTrainParams | None = None,
    motor: MotorCurve | None = None,
) -> SimulationConfig:
    """Short uniform-pipe scenario used as the base for fits.

    Uniform scenarios reach steady state in a single step, so the step
    cap keeps objective evaluations cheap without changing the result.
    """
    geometry = default_strut_geometry()
    return SimulationConfig(
        drivetrain=drivetrain if drivetrain is not None else DriveTrainParams(),
        motor=motor if motor is not None else MotorCurve(),
        geometry=geometry,
        bellows=default_bellows_model(geometry),
        profile=uniform_profile(0.140, 1.0, surface("tissue")),
        slip=SlipModel(),
        rpm=300.0,
        max_steps=5,
    )


def fit_speed_efficiency(
    base: SimulationConfig,
    surface_name: str,
    dataset: ReferenceDataset | None = None,
) -> tuple[SlipModel, FitResult]:
    """Fit the base transmission efficiency to one surface's speed anchor.

    The measured speeds climb monotonically through the whole tested
    speed range, so the speed scenario places the slip knee above the
    anchor speed; the fitted efficiency is the plateau value.
    """
    if dataset is None:
        dataset = builtin_reference_dataset()

    anchors = dataset.filter("linear_speed", condition_prefix=surface_name + "@")
    if not anchors:
        raise ParameterError(f"dataset has no speed anchor for surface {surface_name!r}")
    top_rpm = max(
        float(_SPEED_CONDITION.match(r.condition).group("rpm")) for r in anchors
    )
    knee = rpm_to_rad_s(top_rpm + 20.0)

    def predictor(values: dict[str, float], record: AnchorRecord) -> float | None:
        match = None
        if record.quantity == "linear_speed":
            match = _SPEED_CONDITION.match(record.condition)
        if match is None or match.group("surface") != surface_name:
            return None
        cfg = replace(
            base,
            rpm=float(match.group("rpm")),
            profile=uniform_profile(0.140, base.profile.length, surface(surface_name)),
            slip=SlipModel(
                base_efficiency=values["base_efficiency"],
                knee_speed=knee,
                decay=base.slip.decay,
            ),
        )
        return mean_velocity(run(cfg))

    result = fit(
        ["base_efficiency"],
        dataset,
        {"base_efficiency": 0.6},
        {"base_efficiency": (0.01, 1.0)},
        predictor,
    )
    slip = SlipModel(
        base_efficiency=result.values["base_efficiency"],
        knee_speed=knee,
        decay=base.slip.decay,
    )
    return slip, result


def fit_force_model(
    base: SimulationConfig,
    dataset: ReferenceDataset | None = None,
) -> tuple[DriveTrainParams, SlipModel, FitResult]:
    """Fit track stiffness and the slip knee/decay to the peak-force anchors.

    The knee is bounded to the measured best-propulsion band, inside
    which the peak forces do not depend on it; the stiffness carries the
    fit.  Capacity ordering across surfaces follows the friction catalog.
    """
    if dataset is None:
        dataset = builtin_reference_dataset()
    grid = sorted(rad_s_to_rpm(r.value) for r in dataset.filter("test_rpm"))
    if not grid:
        raise ParameterError("dataset has no test_rpm grid for the force fit")
    band_lo = dataset.value("peak_rpm_band", "low")
    band_hi = dataset.value("peak_rpm_band", "high")

    def predictor(values: dict[str, float], record: AnchorRecord) -> float | None:
        if record.quantity != "peak_force":
            return None
        surf = surface(record.condition)
        params = replace(base.drivetrain, track_stiffness=values["track_stiffness"])
        slip = SlipModel(
            base_efficiency=base.slip.base_efficiency,
            knee_speed=values["knee_speed"],
            decay=values["decay"],
        )
        peaks = []
        for rpm in grid:
            cfg = replace(
                base,
                drivetrain=params,
                slip=slip,
                rpm=rpm,
                profile=uniform_profile(0.140, base.profile.length, surf),
            )
            peaks.append(peak_thrust(run(cfg)))
        return max(peaks)

    initial = {
        "track_stiffness": base.drivetrain.track_stiffness,
        "knee_speed": 0.5 * (band_lo + band_hi),
        "decay": 0.04,
    }
    bounds = {
        "track_stiffness": (1.0, 5000.0),
        "knee_speed": (band_lo, band_hi),
        "decay": (0.005, 0.5),
    }
    result = fit(
        ["track_stiffness", "knee_speed", "decay"],
        dataset,
        initial,
        bounds,
        predictor,
    )
    params = replace(base.drivetrain, track_stiffness=result.values["track_stiffness"])
    slip = SlipModel(
        base_efficiency=base.slip.base_efficiency,
        knee_speed=result.values["knee_speed"],
        decay=result.values["decay"],
    )
    return params, slip, result
