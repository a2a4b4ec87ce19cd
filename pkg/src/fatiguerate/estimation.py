"""Fatigue-rate estimation by log-linearisation and regression through the origin.

For a static hold, ``ln(F_t / MVC) / f = -k t``, so ``k`` is the slope of a
line forced through the origin. Goodness of fit uses the uncentered total sum
of squares, which is the usual R² for a no-intercept model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .biomech import (
    SegmentForces,
    drill_direction,
    joint_moment_from_measured_force,
    mean_frame,
    moment_load,
    segment_forces_from_anthropometry,
)
from .config import RunConfig
from .errors import DegeneracyError, MeasurementError, ProtocolError, ValidationError
from .model import Unit, check_relative_load

SECONDS_PER_MINUTE = 60.0


class AboveMVCWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SessionMeasurement:
    t: float  # minutes
    value: float
    unit: Unit = Unit.FORCE
    label: str = ""
    time_s: float | None = None  # protocol time as recorded, when known

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0):
            raise MeasurementError(f"session {self.label or self.t}: time must be nonnegative")
        if not (math.isfinite(self.value) and self.value > 0):
            raise MeasurementError(
                f"session {self.label or self.t}: strength must be positive, got {self.value}")
        object.__setattr__(self, "unit", Unit(self.unit))

    @classmethod
    def from_seconds(cls, time_s: float, value: float, unit=Unit.FORCE, label: str = ""):
        return cls(time_s / SECONDS_PER_MINUTE, value, unit, label or f"t={time_s:g}s", time_s)


@dataclass
class Linearized:
    t: np.ndarray
    y: np.ndarray
    above_mvc: np.ndarray


@dataclass
class FitResult:
    k_hat: float  # per minute
    r_squared: float
    n_points: int
    residuals: np.ndarray
    r_squared_defined: bool = True
    f_mvc_used: float | None = None
    mvc_used: float | None = None
    unit: Unit | None = None
    quality: str | None = None
    subject_id: str | None = None
    load_used: float | None = None
    flags: list = field(default_factory=list)

    @property
    def k_per_second(self) -> float:
        return self.k_hat / SECONDS_PER_MINUTE


def linearize(measurements, mvc: float, f_mvc: float) -> Linearized:
    """Map strengths onto ``y = ln(value / mvc) / f``; noise-free data gives ``y = -k t``."""
    if not (math.isfinite(mvc) and mvc > 0):
        raise MeasurementError(f"MVC must be positive, got {mvc}")
    f_mvc = check_relative_load(f_mvc)
    t = np.array([m.t for m in measurements], dtype=float)
    values = np.array([m.value for m in measurements], dtype=float)
    bad = ~(values > 0)
    if bad.any():
        labels = [m.label or f"t={m.t:g}min" for m, b in zip(measurements, bad) if b]
        raise MeasurementError(f"non-positive strength in session(s) {', '.join(labels)}")
    y = np.log(values / mvc) / f_mvc
    above = values > mvc
    if above.any():
        warnings.warn(f"{int(above.sum())} measurement(s) exceed MVC", AboveMVCWarning,
                      stacklevel=2)
    return Linearized(t, y, above)


def fit_fatigue_rate(t, y, *, time_unit: str = "min") -> FitResult:
    """Least-squares slope through the origin of ``y = -k t``.

    ``time_unit`` may be ``"min"`` or ``"s"``; times are converted to minutes
    first, so ``k_hat`` is always per minute.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValidationError("t and y must be 1-D arrays of equal length")
    if time_unit == "s":
        t = t / SECONDS_PER_MINUTE
    elif time_unit != "min":
        raise ValidationError(f"time_unit must be 'min' or 's', got {time_unit!r}")
    if t.size < 2:
        raise ValidationError("need at least two points to fit a fatigue rate")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite values in regression input")
    stt = float(t @ t)
    if stt == 0:
        raise DegeneracyError("all session times are zero; slope is undefined")
    syy = float(y @ y)
    if syy == 0:
        return FitResult(0.0, math.nan, t.size, np.zeros_like(y), r_squared_defined=False,
                         flags=["no strength decline"])
    k_hat = -float(t @ y) / stt
    residuals = y + k_hat * t
    r2 = 1.0 - float(residuals @ residuals) / syy
    return FitResult(k_hat, r2, t.size, residuals)


def classify_fit(r_squared: float, good: float = 0.8, fair: float = 0.63) -> str:
    if not math.isfinite(r_squared):
        return "undefined"
    if r_squared > good:
        return "good"
    if r_squared > fair:
        return "fair"
    return "poor"


@dataclass
class MomentConversion:
    capacity_max: float  # Nm
    load: float  # Nm
    session_moments: list  # Nm, one per fatiguing session


def subject_moments(record, config: RunConfig) -> MomentConversion:
    """Convert a record's force measurements into shoulder joint moments."""
    if not record.markers:
        raise ProtocolError(f"subject {record.id}: moment space needs marker data")
    anthro = record.anthropometry(config.segment_coefficients)
    direction = drill_direction(config.beam_inclination_deg)
    task = segment_forces_from_anthropometry(anthro, config.machine_mass_kg,
                                            config.drill_force_n, direction)
    at_measurement = task.without_drill() if config.measurement_gravity else SegmentForces.zero()
    kw = {"load_points": config.load_points, "anthro": anthro}

    frames = {t: mean_frame(fs) for t, fs in record.markers.items() if fs}
    fallback = mean_frame([f for fs in record.markers.values() for f in fs])

    def frame_for(time_s):
        return frames.get(time_s, fallback)

    mvc_frame = frame_for(0.0)
    capacity = joint_moment_from_measured_force(mvc_frame, max(record.mvc_trials), direction,
                                                at_measurement, **kw)
    moments, loads = [], []
    for m in record.fatiguing_sessions():
        frame = frame_for(m.time_s)
        moments.append(joint_moment_from_measured_force(frame, m.value, direction,
                                                        at_measurement, **kw))
        loads.append(moment_load(frame, task, **kw).flexion)
    return MomentConversion(capacity, float(np.mean(loads)), moments)


def fit_subject(record, config: RunConfig | None = None) -> FitResult:
    """Fit one subject: MVC, relative load, linearisation, regression, quality band."""
    config = config or RunConfig()
    if not record.mvc_trials:
        raise ProtocolError(f"subject {record.id}: no MVC measurement")
    sessions = record.fatiguing_sessions()
    if len(sessions) < 2:
        raise ProtocolError(f"subject {record.id}: need at least two fatiguing sessions")

    space = config.space
    if space == "auto":
        space = "moment" if record.markers else "force"
    if space == "moment":
        conv = subject_moments(record, config)
        unit, mvc, load = Unit.MOMENT, conv.capacity_max, conv.load
        values = conv.session_moments
    else:
        unit, mvc = Unit.FORCE, max(record.mvc_trials)
        load = record.task_load if record.task_load is not None else config.task_load_n
        values = [m.value for m in sessions]

    f_mvc = load / mvc
    if not 0 < f_mvc <= 1:
        raise ValidationError(f"subject {record.id}: relative load {f_mvc:.3f} outside (0, 1]")
    points = [SessionMeasurement(0.0, mvc, unit, "MVC")]
    points += [SessionMeasurement(m.t, v, unit, m.label, m.time_s) for m, v in zip(sessions, values)]
    flags = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AboveMVCWarning)
        lin = linearize(points, mvc, f_mvc)
    if caught:
        flags.append("above MVC")
    result = fit_fatigue_rate(lin.t, lin.y)
    result.flags = flags + result.flags
    result.f_mvc_used = f_mvc
    result.mvc_used = mvc
    result.load_used = load
    result.unit = unit
    result.subject_id = record.id
    result.quality = classify_fit(result.r_squared, config.good_r2, config.fair_r2)
    return result
