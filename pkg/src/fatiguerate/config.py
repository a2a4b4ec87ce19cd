"""Run configuration shared by the pipeline stages and the CLI."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .biomech import BEAM_INCLINATION_DEG, DEFAULT_SEGMENT_COEFFICIENTS, DRILL_FORCE_N, MACHINE_MASS_KG
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_SCHEDULE_S = (15.0, 30.0, 45.0, 60.0, 75.0, 90.0, 120.0, 150.0, 180.0)


@dataclass
class RunConfig:
    # analysis space: "auto" uses moments when marker data is present
    space: str = "auto"
    load_points: str = "midpoint"
    measurement_gravity: bool = False
    segment_coefficients: dict = field(default_factory=lambda: dict(DEFAULT_SEGMENT_COEFFICIENTS))
    machine_mass_kg: float = MACHINE_MASS_KG
    drill_force_n: float = DRILL_FORCE_N
    beam_inclination_deg: float = BEAM_INCLINATION_DEG
    task_load_n: float = DRILL_FORCE_N  # force-space load when a record has none

    good_r2: float = 0.8
    fair_r2: float = 0.63
    t_test: str = "welch"
    group_size: int = 10
    r2_bin_width: float = 0.05
    k_bin_width: float = 0.25
    k_bin_max: float = 3.0

    # synthetic cohort
    seed: int = 1
    n_subjects: int = 40
    noise_sigma: float = 0.03
    k_mean: float = 1.02
    k_sd: float = 0.49
    strength_mean: float = 45.1
    strength_sd: float = 7.4
    coupling: float = 0.6
    relative_load_mean: float = 0.243
    relative_load_sd: float = 0.044
    relative_load_min: float = 0.14
    relative_load_max: float = 0.33
    mvc_trials: int = 1
    schedule_s: tuple = DEFAULT_SCHEDULE_S
    sample_rate_hz: float = 30.0
    marker_window_s: float = 1.0
    shoulder_flexion_deg: float = 46.4
    elbow_flexion_deg: float = 50.1
    tool_offset_m: float = 0.10
    quantize_n: float = 0.0  # dynamometer resolution; 0 disables

    output_dir: str = "out"

    def __post_init__(self):
        self.schedule_s = tuple(float(t) for t in self.schedule_s)
        self.validate()

    def validate(self) -> None:
        if self.space not in ("auto", "force", "moment"):
            raise ConfigError(f"space must be auto, force or moment, got {self.space!r}")
        if self.load_points not in ("midpoint", "com"):
            raise ConfigError(f"load_points must be midpoint or com, got {self.load_points!r}")
        if self.t_test not in ("welch", "pooled"):
            raise ConfigError(f"t_test must be welch or pooled, got {self.t_test!r}")
        for name in ("good_r2", "fair_r2"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.fair_r2 > self.good_r2:
            raise ConfigError("fair_r2 must not exceed good_r2")
        if not 0 <= self.noise_sigma < 1:
            raise ConfigError("noise_sigma must lie in [0, 1)")
        if not -1 <= self.coupling <= 1:
            raise ConfigError("coupling must lie in [-1, 1]")
        s = self.schedule_s
        if not s or any(t <= 0 for t in s) or any(b <= a for a, b in zip(s, s[1:])):
            raise ConfigError("schedule must be positive and strictly increasing")
        if self.mvc_trials < 1:
            raise ConfigError("mvc_trials must be at least 1")
        if self.group_size < 2:
            raise ConfigError("group_size must be at least 2")

    @classmethod
    def from_mapping(cls, values: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**values)

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> RunConfig:
        """Read a flat TOML file; ``overrides`` (from CLI flags) win."""
        values = {}
        if path is not None:
            try:
                values = tomllib.loads(Path(path).read_text(encoding="utf-8"))
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule_s"] = list(self.schedule_s)
        return d

    def digest(self) -> str:
        """Stable hash of every setting except the output location."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
