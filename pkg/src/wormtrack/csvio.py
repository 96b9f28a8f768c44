"""CSV emission: stable schemas, 9-significant-digit numbers, LF endings.

CSV is the package's data contract; plotting stacks consume it.  Output
must be byte-identical for identical inputs, so formatting is pinned
here: ``%.9g`` numbers with ``.`` as the decimal separator, ``\\n`` line
endings, flags as 0/1.
"""

from __future__ import annotations

import sys
from typing import IO, Iterable

from .calibration import FitResult
from .engine import DiameterSweepRow, RpmSweepRow, StepRecord
from .contact import PipeProfile

TRACE_HEADER = "t_s,x_m,pipe_d_m,pressure_pa,normal_n,thrust_n,capacity_n,velocity_mps,stalled"
RPM_SWEEP_HEADER = "rpm,surface,mean_velocity_mps,peak_thrust_n"
DIAMETER_SWEEP_HEADER = "diameter_m,inside_pa,outside_pa,peak_thrust_n"
PRESET_HEADER = "x_m,diameter_m,surface"
CALIBRATION_HEADER = "target,parameter,value,rss,converged"


def fmt(value: float) -> str:
    """Serialize a number with 9 significant digits."""
    return "%.9g" % value


def _flag(value: bool) -> str:
    return "1" if value else "0"


def render_csv(header: str, rows: Iterable[str]) -> str:
    lines = [header]
    lines.extend(rows)
    return "\n".join(lines) + "\n"


def trace_csv(trace: list[StepRecord]) -> str:
    rows = (
        ",".join(
            (
                fmt(r.time), fmt(r.position), fmt(r.pipe_diameter), fmt(r.pressure),
                fmt(r.normal_force), fmt(r.thrust), fmt(r.capacity), fmt(r.velocity),
                _flag(r.stalled),
            )
        )
        for r in trace
    )
    return render_csv(TRACE_HEADER, rows)


def rpm_sweep_csv(rows: list[RpmSweepRow]) -> str:
    body = (
        f"{fmt(r.rpm)},{r.surface_name},{fmt(r.mean_velocity)},{fmt(r.peak_thrust)}"
        for r in rows
    )
    return render_csv(RPM_SWEEP_HEADER, body)


def diameter_sweep_csv(rows: list[DiameterSweepRow]) -> str:
    body = (
        f"{fmt(r.diameter)},{fmt(r.inside_pressure)},{fmt(r.outside_pressure)},{fmt(r.peak_thrust)}"
        for r in rows
    )
    return render_csv(DIAMETER_SWEEP_HEADER, body)


def preset_csv(profile: PipeProfile) -> str:
    body = (
        f"{fmt(s.position)},{fmt(s.diameter)},{s.surface.name}"
        for s in profile.stations
    )
    return render_csv(PRESET_HEADER, body)


def calibration_csv(results: list[tuple[str, FitResult]]) -> str:
    body = []
    for target, res in results:
        for name in res.param_names:
            body.append(
                f"{target},{name},{fmt(res.values[name])},{fmt(res.rss)},{_flag(res.converged)}"
            )
    return render_csv(CALIBRATION_HEADER, body)


def write_text(text: str, path: str | None, stream: IO[str] | None = None) -> None:
    """Write to ``path``, or to the stream (stdout by default) when path is None."""
    if path is None:
        (stream or sys.stdout).write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
