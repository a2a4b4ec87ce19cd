"""Shoulder moment load and arm posture from four marker positions.

Coordinates are metres with x forward, y lateral (left) and z up, so the
sagittal plane is x-z and flexion moments act about +y. A positive flexion
moment is the load the shoulder flexors must hold (gravity on a forward arm).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DegenerateFrameError, ValidationError

log = logging.getLogger(__name__)

GRAVITY = 9.81
FLEXION_AXIS = np.array([0.0, 1.0, 0.0])
DOWN = np.array([0.0, 0.0, -1.0])

# Literature-typical values; the experiment's own anthropometric table is not
# available, so these are defaults only.
DEFAULT_SEGMENT_COEFFICIENTS = {
    "upper_arm_mass_fraction": 0.028,
    "forearm_mass_fraction": 0.022,  # forearm + hand
    "upper_arm_com_fraction": 0.436,  # from the shoulder
    "forearm_com_fraction": 0.682,  # from the elbow
}

MACHINE_MASS_KG = 2.5
DRILL_FORCE_N = 25.0
BEAM_INCLINATION_DEG = 14.5


def _vec(v, name):
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} has non-finite coordinates")
    return arr


@dataclass(frozen=True)
class MarkerFrame:
    s: np.ndarray
    e: np.ndarray
    w: np.ndarray
    d: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        for name in ("s", "e", "w", "d"):
            object.__setattr__(self, name, _vec(getattr(self, name), name))

    @property
    def is_degenerate(self) -> bool:
        return bool(np.linalg.norm(self.s - self.e) == 0 or np.linalg.norm(self.e - self.w) == 0)

    def translated(self, offset) -> MarkerFrame:
        offset = _vec(offset, "offset")
        return MarkerFrame(self.s + offset, self.e + offset, self.w + offset, self.d + offset,
                           self.timestamp)

    def as_array(self) -> np.ndarray:
        return np.stack([self.s, self.e, self.w, self.d])


def mean_frame(frames) -> MarkerFrame:
    """Average marker positions over a static hold."""
    frames = list(frames)
    if not frames:
        raise ValidationError("cannot average an empty list of frames")
    if len(frames) == 1:
        return frames[0]
    stacked = np.stack([f.as_array() for f in frames]).mean(axis=0)
    return MarkerFrame(*stacked, timestamp=sum(f.timestamp for f in frames) / len(frames))


@dataclass(frozen=True)
class SegmentForces:
    G_u: np.ndarray
    G_f: np.ndarray
    G_m: np.ndarray
    F_d: np.ndarray

    def __post_init__(self):
        for name in ("G_u", "G_f", "G_m", "F_d"):
            object.__setattr__(self, name, _vec(getattr(self, name), name))
        for name in ("G_u", "G_f", "G_m"):
            g = getattr(self, name)
            if g[0] != 0 or g[1] != 0 or g[2] > 0:
                raise ValidationError(f"{name} must point along -z, got {g.tolist()}")

    def __add__(self, other: SegmentForces) -> SegmentForces:
        return SegmentForces(self.G_u + other.G_u, self.G_f + other.G_f,
                             self.G_m + other.G_m, self.F_d + other.F_d)

    def without_drill(self) -> SegmentForces:
        return replace(self, F_d=np.zeros(3))

    @classmethod
    def zero(cls) -> SegmentForces:
        z = np.zeros(3)
        return cls(z, z, z, z)


@dataclass(frozen=True)
class Anthropometry:
    body_mass: float
    stature: float
    upper_arm_length: float
    forearm_length: float
    coefficients: dict = field(default_factory=lambda: dict(DEFAULT_SEGMENT_COEFFICIENTS))

    def __post_init__(self):
        if not (math.isfinite(self.body_mass) and self.body_mass >= 0):
            raise ValidationError(f"body_mass must be nonnegative, got {self.body_mass}")
        for name in ("stature", "upper_arm_length", "forearm_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive, got {value}")
        for key, value in self.coefficients.items():
            if key.endswith("mass_fraction") and not 0 < value < 0.1:
                raise ValidationError(f"{key}={value} outside (0, 0.1)")
            if key.endswith("com_fraction") and not 0 < value < 1:
                raise ValidationError(f"{key}={value} outside (0, 1)")

    def coefficient(self, key: str) -> float:
        try:
            return float(self.coefficients[key])
        except KeyError:
            raise ConfigError(f"missing segment coefficient {key!r}") from None


@dataclass(frozen=True)
class PostureAngles:
    q1: float  # shoulder flexion, degrees
    q2: float  # elbow flexion, degrees

    def __post_init__(self):
        for name in ("q1", "q2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 180.0):
                raise ValidationError(f"{name} must lie in [0, 180] degrees, got {value}")


@dataclass(frozen=True)
class MomentResult:
    vector: np.ndarray  # Nm, full 3-D moment about the shoulder
    flexion: float  # Nm, component about the sagittal flexion axis
    out_of_plane: float  # Nm, magnitude of the discarded components


def drill_direction(inclination_deg: float = BEAM_INCLINATION_DEG) -> np.ndarray:
    """Unit vector of the drilling reaction: back toward the subject, tilted down."""
    a = math.radians(inclination_deg)
    return np.array([-math.cos(a), 0.0, -math.sin(a)])


def _load_points(frame: MarkerFrame, load_points: str, anthro: Anthropometry | None):
    s, e, w, d = frame.s, frame.e, frame.w, frame.d
    if load_points == "midpoint":
        r_u = (s + e) / 2 - s
        r_f = (w + e) / 2 - s
    elif load_points == "com":
        if anthro is None:
            raise ConfigError("load_points='com' needs an Anthropometry for its CoM fractions")
        r_u = anthro.coefficient("upper_arm_com_fraction") * (e - s)
        r_f = e + anthro.coefficient("forearm_com_fraction") * (w - e) - s
    else:
        raise ConfigError(f"unknown load_points {load_points!r}")
    r_m = (d + w) / 2 - s
    r_d = d - s
    return r_u, r_f, r_m, r_d


def moment_load(
    frame: MarkerFrame,
    forces: SegmentForces,
    *,
    load_points: str = "midpoint",
    anthro: Anthropometry | None = None,
    allow_degenerate: bool = False,
) -> MomentResult:
    """Shoulder moment from segment weights, machine weight and drilling force.

    Segment weights act at segment midpoints by default; ``load_points="com"``
    places them at the anthropometric centres of mass instead.
    """
    if frame.is_degenerate and not allow_degenerate:
        raise DegenerateFrameError("zero-length upper arm or forearm in marker frame")
    r_u, r_f, r_m, r_d = _load_points(frame, load_points, anthro)
    vector = (np.cross(r_u, forces.G_u) + np.cross(r_f, forces.G_f)
              + np.cross(r_m, forces.G_m) + np.cross(r_d, forces.F_d))
    flexion = float(vector @ FLEXION_AXIS)
    out_of_plane = float(np.linalg.norm(vector - flexion * FLEXION_AXIS))
    if out_of_plane > 0:
        log.debug("discarded %.3g Nm of out-of-plane moment", out_of_plane)
    return MomentResult(vector, flexion, out_of_plane)


def segment_forces_from_anthropometry(
    anthro: Anthropometry,
    machine_mass: float = MACHINE_MASS_KG,
    drill_force_magnitude: float = DRILL_FORCE_N,
    direction=None,
) -> SegmentForces:
    if direction is None:
        direction = drill_direction()
    direction = _vec(direction, "drill direction")
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise ValidationError("drill direction must be a unit vector")
    if machine_mass < 0 or drill_force_magnitude < 0:
        raise ValidationError("machine mass and drill force must be nonnegative")
    m_u = anthro.coefficient("upper_arm_mass_fraction") * anthro.body_mass
    m_f = anthro.coefficient("forearm_mass_fraction") * anthro.body_mass
    return SegmentForces(
        G_u=m_u * GRAVITY * DOWN,
        G_f=m_f * GRAVITY * DOWN,
        G_m=machine_mass * GRAVITY * DOWN,
        F_d=drill_force_magnitude * direction,
    )


def _planar_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Unsigned angle in degrees between the x-z projections of a and b."""
    a2, b2 = a[[0, 2]], b[[0, 2]]
    if not (np.any(a2) and np.any(b2)):
        raise DegenerateFrameError("segment has zero length in the sagittal plane")
    cross = a2[0] * b2[1] - a2[1] * b2[0]
    return math.degrees(math.atan2(abs(cross), float(a2 @ b2)))


def posture_angles(frame: MarkerFrame) -> PostureAngles:
    """Shoulder flexion from the downward vertical and elbow flexion from the
    extended upper-arm line, both measured in the sagittal plane."""
    upper = frame.e - frame.s
    fore = frame.w - frame.e
    return PostureAngles(_planar_angle(DOWN, upper), _planar_angle(upper, fore))


def drill_moment_arm(frame: MarkerFrame, direction) -> float:
    """Flexion moment per newton of force along ``direction`` applied at D."""
    return float(np.cross(frame.d - frame.s, _vec(direction, "direction")) @ FLEXION_AXIS)


def joint_moment_from_measured_force(
    frame: MarkerFrame,
    measured_force_magnitude: float,
    direction,
    forces_at_measurement: SegmentForces,
    **kwargs,
) -> float:
    """Joint moment strength implied by a maximal push measured along the drilling direction."""
    if not (math.isfinite(measured_force_magnitude) and measured_force_magnitude >= 0):
        raise ValidationError(f"measured force must be nonnegative, got {measured_force_magnitude}")
    forces = replace(forces_at_measurement,
                     F_d=measured_force_magnitude * _vec(direction, "direction"))
    return moment_load(frame, forces, **kwargs).flexion
