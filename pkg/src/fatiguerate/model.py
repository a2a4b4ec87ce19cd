"""Static and dynamic remaining-capacity model.

Remaining capacity decays as

    dF_rem/dt = -k * (F_rem / F_max) * F_load(t)

which for a constant relative load ``f = F_load / F_max`` has the closed form
``F_rem(t) / F_max = exp(-k f t)``. The same dynamics hold in joint-moment
space, so every quantity carries a :class:`Unit` tag.

All times are in minutes and ``k`` is per minute.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


class Unit(str, enum.Enum):
    FORCE = "force"  # N
    MOMENT = "moment"  # Nm

    @property
    def symbol(self) -> str:
        return "N" if self is Unit.FORCE else "Nm"


class UnitMismatchError(ValidationError):
    pass


@dataclass(frozen=True)
class FatigueParameters:
    k: float
    capacity_max: float
    unit: Unit = Unit.FORCE

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError(f"fatigue rate must be positive and finite, got {self.k}")
        if not (math.isfinite(self.capacity_max) and self.capacity_max > 0):
            raise ValidationError(f"capacity_max must be positive and finite, got {self.capacity_max}")
        object.__setattr__(self, "unit", Unit(self.unit))


def check_relative_load(f_mvc: float) -> float:
    """Validate a relative load ``0 < f <= 1`` and return it as float."""
    f_mvc = float(f_mvc)
    if not (math.isfinite(f_mvc) and 0.0 < f_mvc <= 1.0):
        raise ValidationError(f"relative load must lie in (0, 1], got {f_mvc}")
    return f_mvc


@dataclass(frozen=True)
class ConstantLoad:
    load: float
    unit: Unit = Unit.FORCE

    def __post_init__(self):
        if not math.isfinite(self.load):
            raise ValidationError(f"load must be finite, got {self.load}")
        if self.load < 0:
            raise ValidationError(f"load must be nonnegative, got {self.load}")
        object.__setattr__(self, "unit", Unit(self.unit))

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.load)

    def breakpoints(self) -> np.ndarray:
        return np.empty(0)

    def step_loads(self, left, right):
        n = np.shape(left)
        return np.full(n, self.load), np.full(n, self.load), np.full(n, self.load)


@dataclass(frozen=True)
class SampledLoad:
    """Load sampled at increasing times.

    ``interpolation="linear"`` joins samples linearly; ``"previous"`` holds each
    sample until the next one (a step profile). Outside the sampled range the
    nearest end value is held.
    """

    times: np.ndarray
    loads: np.ndarray
    unit: Unit = Unit.FORCE
    interpolation: str = "linear"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        loads = np.asarray(self.loads, dtype=float)
        if times.ndim != 1 or times.shape != loads.shape or times.size == 0:
            raise ValidationError("times and loads must be 1-D arrays of equal, nonzero length")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(loads))):
            raise ValidationError("sampled load contains non-finite values")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("sample times must be strictly increasing")
        if np.any(loads < 0):
            raise ValidationError("loads must be nonnegative")
        if self.interpolation not in ("linear", "previous"):
            raise ValidationError(f"unknown interpolation rule {self.interpolation!r}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "unit", Unit(self.unit))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.interpolation == "linear":
            return np.interp(t, self.times, self.loads)
        idx = np.searchsorted(self.times, t, side="right") - 1
        return self.loads[np.clip(idx, 0, self.loads.size - 1)]

    def breakpoints(self) -> np.ndarray:
        return self.times

    def step_loads(self, left, right):
        if self.interpolation == "linear":
            return self(left), self((left + right) / 2), self(right)
        # Breakpoints sit on the grid, so the midpoint identifies the held value.
        held = self((left + right) / 2)
        return held, held, held


LoadProfile = ConstantLoad | SampledLoad


def remaining_capacity_static(params: FatigueParameters, f_mvc: float, t):
    """Fraction of maximum capacity left after holding ``f_mvc`` for ``t`` minutes.

    Accepts scalar or array ``t``; arrays are returned as arrays.
    """
    f_mvc = check_relative_load(f_mvc)
    t_arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < 0):
        raise ValidationError("time must be finite and nonnegative")
    out = np.exp(-params.k * f_mvc * t_arr)
    return float(out) if out.ndim == 0 else out


@dataclass
class CapacitySeries:
    times: np.ndarray  # minutes
    values: np.ndarray  # remaining capacity in params.unit
    unit: Unit = Unit.FORCE
    meta: dict = field(default_factory=dict)

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


def _time_grid(t_end: float, step: float, breakpoints: np.ndarray) -> np.ndarray:
    n = int(math.floor(t_end / step + 1e-9))
    grid = np.arange(n + 1) * step
    if grid[-1] < t_end - 1e-12 * max(1.0, t_end):
        grid = np.append(grid, t_end)
    else:
        grid[-1] = t_end
    inner = breakpoints[(breakpoints > 0) & (breakpoints < t_end)]
    if inner.size:
        grid = np.unique(np.concatenate([grid, inner]))
        # drop slivers created by breakpoints landing next to grid nodes
        keep = np.concatenate([[True], np.diff(grid) > 1e-12 * max(1.0, t_end)])
        grid = grid[keep]
        grid[-1] = t_end
    return grid


def integrate_capacity(
    params: FatigueParameters,
    load: LoadProfile,
    t_end: float,
    step: float = 1e-3,
) -> CapacitySeries:
    """Integrate the remaining-capacity ODE with classical fixed-step RK4.

    The grid is uniform with spacing ``step`` except that breakpoints of a
    sampled load and ``t_end`` itself are inserted as nodes.
    """
    if Unit(load.unit) is not params.unit:
        raise UnitMismatchError(
            f"load is tagged {load.unit.value} but parameters are {params.unit.value}"
        )
    if not (math.isfinite(step) and step > 0):
        raise ValidationError(f"step must be positive, got {step}")
    if not (math.isfinite(t_end) and t_end > 0):
        raise ValidationError(f"t_end must be positive, got {t_end}")
    if step > t_end:
        raise ValidationError("step must not exceed t_end")

    grid = _time_grid(t_end, step, load.breakpoints())
    left, right = grid[:-1], grid[1:]
    l1, l2, l3 = load.step_loads(left, right)
    rate = params.k / params.capacity_max
    a1 = (-rate * l1).tolist()
    a2 = (-rate * l2).tolist()
    a3 = (-rate * l3).tolist()
    hs = (right - left).tolist()

    values = [0.0] * grid.size
    y = float(params.capacity_max)
    values[0] = y
    for i, h in enumerate(hs):
        # rhs(t, y) = a(t) * y with a evaluated at the step start, middle and end
        k1 = a1[i] * y
        k2 = a2[i] * (y + 0.5 * h * k1)
        k3 = a2[i] * (y + 0.5 * h * k2)
        k4 = a3[i] * (y + h * k3)
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        values[i + 1] = y
    return CapacitySeries(grid, np.asarray(values), params.unit, {"step": step, "method": "rk4"})


def endurance_time(params: FatigueParameters, f_mvc: float) -> float:
    """Minutes until remaining capacity falls to the held load.

    Solves ``exp(-k f t) = f``. A load at full capacity (``f >= 1``) gives 0.
    """
    f_mvc = float(f_mvc)
    if not math.isfinite(f_mvc) or f_mvc <= 0:
        raise ValidationError(f"relative load must be positive, got {f_mvc}")
    if f_mvc >= 1.0:
        return 0.0
    return -math.log(f_mvc) / (params.k * f_mvc)
