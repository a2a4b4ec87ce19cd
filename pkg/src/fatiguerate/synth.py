"""Synthetic subjects with known fatigue parameters.

Everything here is a pure function of its arguments and seed. Per-subject
random streams come from ``np.random.default_rng([seed, index])`` so subjects
can be generated independently and in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, truncnorm

from .biomech import (
    Anthropometry,
    MarkerFrame,
    PostureAngles,
    SegmentForces,
    drill_direction,
    drill_moment_arm,
    moment_load,
    posture_angles,
    segment_forces_from_anthropometry,
)
from .config import DEFAULT_SCHEDULE_S, RunConfig
from .errors import ValidationError
from .estimation import SessionMeasurement
from .model import Unit
from .records import SubjectRecord

# Mean arm posture (degrees) across the cohort at each session time (seconds).
MEAN_POSTURE_TIMES_S = (0, 15, 30, 45, 60, 75, 90, 120, 150, 180)
MEAN_ELBOW_DEG = (50.1, 53.1, 55.1, 55.1, 57.5, 59.9, 59.9, 64.2, 66.7, 75.5)
MEAN_SHOULDER_DEG = (46.4, 44.5, 43.6, 44.2, 42.8, 42.1, 41.9, 39.7, 37.5, 30.5)

# Cohort anthropometry: (mean, sd, min, max)
ANTHRO_MOMENTS = {
    "age_yr": (41.2, 11.4, 19.0, 58.0),
    "stature_m": (1.712, 0.051, 1.600, 1.830),
    "mass_kg": (70.2, 10.4, 50.0, 95.0),
    "upper_limb_cm": (23.6, 3.0, 16.0, 31.0),
    "lower_limb_cm": (25.6, 1.8, 22.0, 29.0),
}

SHOULDER_POSITION = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ProtocolSchedule:
    times_s: tuple = DEFAULT_SCHEDULE_S

    def __post_init__(self):
        t = tuple(float(x) for x in self.times_s)
        if not t or t[0] <= 0 or any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError("schedule times must be positive and strictly increasing")
        object.__setattr__(self, "times_s", t)


@dataclass(frozen=True)
class SyntheticSubjectSpec:
    true_k: float
    true_capacity_max: float
    f_mvc: float
    noise_sigma: float = 0.0
    rng_seed: int = 0
    unit: Unit = Unit.FORCE
    anthropometry: Anthropometry | None = None

    def __post_init__(self):
        if not self.true_k > 0:
            raise ValidationError("true_k must be positive")
        if not self.true_capacity_max > 0:
            raise ValidationError("true_capacity_max must be positive")
        if not 0 < self.f_mvc <= 1:
            raise ValidationError("f_mvc must lie in (0, 1]")
        if not self.noise_sigma >= 0:
            raise ValidationError("noise_sigma must be nonnegative")
        object.__setattr__(self, "unit", Unit(self.unit))


def generate_sessions(spec: SyntheticSubjectSpec, schedule: ProtocolSchedule | None = None,
                      rng=None) -> list:
    """MVC entry followed by one measurement per scheduled hold.

    Values follow the static exponential decay times median-one log-normal
    noise; the MVC entry carries its own noise draw.
    """
    schedule = schedule or ProtocolSchedule()
    rng = np.random.default_rng(spec.rng_seed) if rng is None else rng
    times_s = (0.0,) + schedule.times_s
    t_min = np.array(times_s) / 60.0
    eps = rng.normal(0.0, spec.noise_sigma, t_min.size) if spec.noise_sigma > 0 else np.zeros(t_min.size)
    values = spec.true_capacity_max * np.exp(-spec.true_k * spec.f_mvc * t_min) * np.exp(eps)
    labels = ["MVC"] + [f"t={t:g}s" for t in schedule.times_s]
    return [SessionMeasurement.from_seconds(ts, float(v), spec.unit, lab)
            for ts, v, lab in zip(times_s, values, labels)]


def truncated_normal_ppf(u, mean: float, sd: float, lo: float = -math.inf, hi: float = math.inf):
    a, b = (lo - mean) / sd, (hi - mean) / sd
    return truncnorm.ppf(u, a, b, loc=mean, scale=sd)


def coupled_draws(n: int, rho: float, rng) -> tuple:
    """Two uniform vectors joined by a Gaussian copula with correlation ``rho``."""
    if not -1 <= rho <= 1:
        raise ValidationError(f"coupling must lie in [-1, 1], got {rho}")
    z1 = rng.standard_normal(n)
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal(n)
    return norm.cdf(z1), norm.cdf(z2)


def frame_from_posture(q1_deg: float, q2_deg: float, upper_arm: float, forearm: float,
                       tool_offset: float = 0.10, shoulder=SHOULDER_POSITION,
                       timestamp: float = 0.0) -> MarkerFrame:
    """Sagittal-plane forward kinematics; the drilling point continues the forearm line."""
    s = np.asarray(shoulder, dtype=float)
    q1 = math.radians(q1_deg)
    phi = q1 + math.radians(q2_deg)
    u = np.array([math.sin(q1), 0.0, -math.cos(q1)])
    v = np.array([math.sin(phi), 0.0, -math.cos(phi)])
    e = s + upper_arm * u
    w = e + forearm * v
    return MarkerFrame(s, e, w, w + tool_offset * v, timestamp)


def generate_marker_trace(anthro: Anthropometry, posture_trajectory, sample_rate: float = 30.0,
                          tool_offset: float = 0.10, shoulder=SHOULDER_POSITION) -> list:
    trajectory = list(posture_trajectory)
    if not trajectory:
        raise ValidationError("posture trajectory is empty")
    if not sample_rate > 0:
        raise ValidationError("sample rate must be positive")
    frames = []
    for i, p in enumerate(trajectory):
        if not isinstance(p, PostureAngles):
            p = PostureAngles(*p)
        frames.append(frame_from_posture(p.q1, p.q2, anthro.upper_arm_length,
                                         anthro.forearm_length, tool_offset, shoulder,
                                         timestamp=i / sample_rate))
    return frames


def mean_posture_trajectory() -> list:
    return [PostureAngles(q, e) for q, e in zip(MEAN_SHOULDER_DEG, MEAN_ELBOW_DEG)]


def _anthro_draw(rng) -> dict:
    out = {}
    for name, (mean, sd, lo, hi) in ANTHRO_MOMENTS.items():
        out[name] = float(np.clip(rng.normal(mean, sd), lo, hi))
    out["age_yr"] = float(round(out["age_yr"]))
    return out


def generate_cohort(
    n: int,
    k_distribution=(1.02, 0.49),
    strength_distribution=(45.1, 7.4),
    coupling: float = 0.6,
    seed: int = 1,
    *,
    space: str = "moment",
    config: RunConfig | None = None,
) -> list:
    """Synthetic cohort with truncated-normal fatigue rates and strengths.

    Fatigue rate and strength are joined through a Gaussian copula. In moment
    space each subject gets a static arm posture, marker frames and forces
    measured along the drilling direction; strength is the joint moment
    capacity and the relative load follows from the task geometry. In force
    space strength is MVC in newtons and the relative load is drawn from the
    configured relative-load distribution.
    """
    config = config or RunConfig()
    if n < 1:
        raise ValidationError("cohort size must be at least 1")
    if space not in ("moment", "force"):
        raise ValidationError(f"space must be moment or force, got {space!r}")
    k_mean, k_sd = k_distribution
    s_mean, s_sd = strength_distribution
    if not (k_sd > 0 and s_sd > 0):
        raise ValidationError("distribution SDs must be positive")

    cohort_rng = np.random.default_rng([seed, n])
    u_k, u_s = coupled_draws(n, coupling, cohort_rng)
    ks = truncated_normal_ppf(u_k, k_mean, k_sd, lo=0.0)
    strengths = truncated_normal_ppf(u_s, s_mean, s_sd, lo=0.0)
    schedule = ProtocolSchedule(config.schedule_s)
    width = max(3, len(str(n)))

    records = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        sid = f"S{i + 1:0{width}d}"
        body = _anthro_draw(rng)
        if space == "moment":
            rec = _moment_subject(sid, body, float(ks[i]), float(strengths[i]), schedule, config, rng)
        else:
            rec = _force_subject(sid, body, float(ks[i]), float(strengths[i]), schedule, config, rng)
        records.append(rec)
    return records


def _extra_mvc_trials(capacity, count, sigma, rng):
    if count <= 1:
        return []
    return list(capacity * np.exp(rng.normal(0.0, sigma, count - 1)))


def _quantize(x: float, step: float) -> float:
    if step <= 0:
        return x
    return max(step, round(x / step) * step)


def _force_subject(sid, body, k, strength, schedule, config, rng):
    f = float(truncated_normal_ppf(rng.uniform(), config.relative_load_mean, config.relative_load_sd,
                                   config.relative_load_min, config.relative_load_max))
    spec = SyntheticSubjectSpec(k, strength, f, config.noise_sigma, unit=Unit.FORCE)
    measured = generate_sessions(spec, schedule, rng=rng)
    mvc = [measured[0].value] + _extra_mvc_trials(strength, config.mvc_trials, config.noise_sigma, rng)
    q = config.quantize_n
    return SubjectRecord(
        sid, **body,
        mvc_trials=[_quantize(v, q) for v in mvc],
        sessions=[SessionMeasurement.from_seconds(m.time_s, _quantize(m.value, q))
                  for m in measured[1:]],
        task_load=f * strength,
        truth={"unit": "force", "true_k": k, "true_capacity_max": strength, "f_mvc": f,
               "true_load": f * strength},
    )


def _moment_subject(sid, body, k, capacity, schedule, config, rng):
    anthro = Anthropometry(body["mass_kg"], body["stature_m"], body["upper_limb_cm"] / 100,
                           body["lower_limb_cm"] / 100, dict(config.segment_coefficients))
    frame = frame_from_posture(config.shoulder_flexion_deg, config.elbow_flexion_deg,
                               anthro.upper_arm_length, anthro.forearm_length, config.tool_offset_m)
    direction = drill_direction(config.beam_inclination_deg)
    task = segment_forces_from_anthropometry(anthro, config.machine_mass_kg, config.drill_force_n,
                                            direction)
    kw = {"load_points": config.load_points, "anthro": anthro}
    load = moment_load(frame, task, **kw).flexion
    at_measurement = task.without_drill() if config.measurement_gravity else SegmentForces.zero()
    offset = moment_load(frame, at_measurement, **kw).flexion
    arm = drill_moment_arm(frame, direction)
    if arm <= 0:
        raise ValidationError(f"subject {sid}: drilling force has no flexion moment arm")
    # A capacity at or below the task load cannot hold the posture at all.
    capacity = max(capacity, load / 0.95)
    f = load / capacity

    spec = SyntheticSubjectSpec(k, capacity, f, config.noise_sigma, unit=Unit.MOMENT)
    measured = generate_sessions(spec, schedule, rng=rng)
    mvc_moments = [measured[0].value] + _extra_mvc_trials(capacity, config.mvc_trials,
                                                          config.noise_sigma, rng)

    def to_force(moment, label):
        force = (moment - offset) / arm
        if force <= 0:
            raise ValidationError(
                f"subject {sid}: remaining moment {moment:.2f} Nm at {label} is below the "
                f"gravity moment {offset:.2f} Nm; disable measurement_gravity or shorten the schedule")
        return force

    # MVC converts through the same map, so the moment-space MVC that the fit
    # sees is max(trials) exactly as generated.
    mvc_forces = [to_force(m, "MVC") for m in mvc_moments]
    sessions = [SessionMeasurement.from_seconds(m.time_s, to_force(m.value, m.label))
                for m in measured[1:]]

    n_frames = max(1, int(round(config.marker_window_s * config.sample_rate_hz)))
    stamps = [j / config.sample_rate_hz for j in range(n_frames)]
    markers = {t: [MarkerFrame(frame.s, frame.e, frame.w, frame.d, ts) for ts in stamps]
               for t in (0.0,) + schedule.times_s}
    return SubjectRecord(
        sid, **body, mvc_trials=mvc_forces, sessions=sessions, markers=markers,
        truth={"unit": "moment", "true_k": k, "true_capacity_max": capacity, "f_mvc": f,
               "true_load": load},
    )


def check_posture_round_trip(frames, trajectory) -> float:
    """Largest angle error in degrees between a trajectory and its recovered angles."""
    worst = 0.0
    for frame, p in zip(frames, trajectory):
        got = posture_angles(frame)
        worst = max(worst, abs(got.q1 - p.q1), abs(got.q2 - p.q2))
    return worst
