"""Cohort statistics: summaries, Pearson correlations, strength groups, t-tests."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from .errors import ValidationError


class TieWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    min: float
    max: float
    n: int

    @property
    def sd_defined(self) -> bool:
        return self.n > 1


def summarize(values) -> Summary:
    """Mean, sample SD (n-1), min and max. A single value reports SD 0."""
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValidationError("cannot summarize an empty sample")
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    mean = float(np.mean(x))
    lo, hi = float(x.min()), float(x.max())
    # keep min <= mean <= max despite rounding in the mean
    return Summary(min(max(mean, lo), hi), sd, lo, hi, int(x.size))


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t."""
    if math.isnan(t) or math.isnan(df):
        return math.nan
    return float(2.0 * stdtr(df, -abs(t)))


@dataclass
class CohortTable:
    ids: list
    columns: dict

    def __post_init__(self):
        self.ids = [str(i) for i in self.ids]
        if len(set(self.ids)) != len(self.ids):
            seen, dups = set(), set()
            for i in self.ids:
                (dups if i in seen else seen).add(i)
            raise ValidationError(f"duplicate subject ids: {', '.join(sorted(dups))}")
        cols = {}
        for name, values in self.columns.items():
            arr = np.asarray(values, dtype=float)
            if arr.shape != (len(self.ids),):
                raise ValidationError(f"column {name!r} has {arr.size} values for {len(self.ids)} ids")
            if np.any(np.isinf(arr)):
                raise ValidationError(f"column {name!r} has infinite values")
            cols[name] = arr
        self.columns = cols

    def __len__(self):
        return len(self.ids)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ValidationError(f"cohort table has no column {name!r}") from None

    def subset(self, ids) -> CohortTable:
        index = {i: n for n, i in enumerate(self.ids)}
        rows = [index[i] for i in ids]
        return CohortTable([self.ids[r] for r in rows],
                           {k: v[rows] for k, v in self.columns.items()})


def pearson(x, y):
    """Pearson r, two-sided p and the pair count after dropping missing values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = ~(np.isnan(x) | np.isnan(y))
    x, y = x[ok], y[ok]
    n = int(x.size)
    if n < 3:
        return math.nan, math.nan, n
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return math.nan, math.nan, n
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0, n
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_sf_two_sided(t, n - 2), n


@dataclass
class CorrelationMatrix:
    columns: list
    r: np.ndarray
    p: np.ndarray
    n: np.ndarray


def correlation_matrix(table: CohortTable, columns) -> CorrelationMatrix:
    columns = list(columns)
    m = len(columns)
    r = np.full((m, m), np.nan)
    p = np.full((m, m), np.nan)
    n = np.zeros((m, m), dtype=int)
    data = [table.column(c) for c in columns]
    for i in range(m):
        for j in range(i, m):
            rij, pij, nij = pearson(data[i], data[j])
            if i == j and not math.isnan(rij):
                rij, pij = 1.0, 0.0
            r[i, j] = r[j, i] = rij
            p[i, j] = p[j, i] = pij
            n[i, j] = n[j, i] = nij
    return CorrelationMatrix(columns, r, p, n)


def split_by_strength(table: CohortTable, group_size: int, column: str = "joint_moment_strength"):
    """Ids of the ``group_size`` strongest (A) and weakest (B) subjects.

    Subjects are ordered by strength, then id, so ties split deterministically.
    """
    if group_size < 1 or len(table) < 2 * group_size:
        raise ValidationError(
            f"need at least {2 * group_size} subjects for groups of {group_size}, have {len(table)}")
    strength = table.column(column)
    if np.any(np.isnan(strength)):
        raise ValidationError(f"column {column!r} has missing values")
    order = sorted(range(len(table)), key=lambda i: (strength[i], table.ids[i]))
    low, high = order[:group_size], order[-group_size:]
    if strength[high].min() == strength[low].max():
        warnings.warn("tied strengths straddle the group boundary; split by subject id",
                      TieWarning, stacklevel=2)
    return [table.ids[i] for i in high], [table.ids[i] for i in low]


@dataclass
class GroupComparison:
    group_a: Summary
    group_b: Summary
    t_statistic: float
    p_value: float  # two-sided
    df: float
    variant: str
    p_one_sided: float  # H1: mean_a > mean_b
    alternate: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)


def _welch(ma, va, na, mb, vb, nb):
    se2 = va / na + vb / nb
    if se2 == 0:
        return _zero_se(ma - mb), math.nan
    t = (ma - mb) / math.sqrt(se2)
    df = se2 ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return t, df


def _pooled(ma, va, na, mb, vb, nb):
    df = na + nb - 2
    sp2 = ((na - 1) * va + (nb - 1) * vb) / df
    se2 = sp2 * (1.0 / na + 1.0 / nb)
    if se2 == 0:
        return _zero_se(ma - mb), float(df)
    return (ma - mb) / math.sqrt(se2), float(df)


def _zero_se(diff):
    if diff == 0:
        return math.nan
    return math.copysign(math.inf, diff)


def _p_values(t, df):
    if math.isnan(t):
        return math.nan, math.nan
    if math.isinf(t):
        return 0.0, (0.0 if t > 0 else 1.0)
    if math.isnan(df):
        return math.nan, math.nan
    return t_sf_two_sided(t, df), float(stdtr(df, -t))


def t_test_from_summary(mean_a, sd_a, n_a, mean_b, sd_b, n_b, variant: str = "welch") -> GroupComparison:
    """Two-sample t-test from group means, sample SDs and sizes.

    Both the Welch and the pooled-variance statistics are computed; ``variant``
    picks the primary one and the other lands in ``alternate``.
    """
    if n_a < 2 or n_b < 2:
        raise ValidationError("each group needs at least two observations")
    if sd_a < 0 or sd_b < 0:
        raise ValidationError("standard deviations must be nonnegative")
    if variant not in ("welch", "pooled"):
        raise ValidationError(f"unknown t-test variant {variant!r}")
    args = (mean_a, sd_a ** 2, n_a, mean_b, sd_b ** 2, n_b)
    results = {"welch": _welch(*args), "pooled": _pooled(*args)}
    t, df = results[variant]
    p2, p1 = _p_values(t, df)
    other = "pooled" if variant == "welch" else "welch"
    t_o, df_o = results[other]
    p2_o, _ = _p_values(t_o, df_o)
    flags = []
    if sd_a == 0 and sd_b == 0:
        flags.append("zero variance in both groups")
        if math.isinf(t):
            flags.append("infinite t")
    return GroupComparison(
        Summary(mean_a, sd_a, math.nan, math.nan, n_a),
        Summary(mean_b, sd_b, math.nan, math.nan, n_b),
        t, p2, df, variant, p1,
        alternate={"variant": other, "t_statistic": t_o, "p_value": p2_o, "df": df_o},
        flags=flags,
    )


def t_test(a, b, variant: str = "welch") -> GroupComparison:
    sa, sb = summarize(a), summarize(b)
    if sa.n < 2 or sb.n < 2:
        raise ValidationError("each group needs at least two observations")
    out = t_test_from_summary(sa.mean, sa.sd, sa.n, sb.mean, sb.sd, sb.n, variant)
    out.group_a, out.group_b = sa, sb
    return out


def histogram(values, width: float, lo: float = 0.0, hi: float = 1.0):
    """Counts on equal-width bins covering [lo, hi]; the last bin is closed."""
    if width <= 0 or hi <= lo:
        raise ValidationError("histogram needs positive width and hi > lo")
    nbins = int(round((hi - lo) / width))
    if nbins < 1 or not math.isclose(nbins * width, hi - lo, rel_tol=1e-9):
        raise ValidationError(f"width {width} does not tile [{lo}, {hi}]")
    edges = np.linspace(lo, hi, nbins + 1)
    x = np.asarray(values, dtype=float)
    x = x[~np.isnan(x)]
    # out-of-range values (e.g. negative R²) are counted in the end bins
    counts, _ = np.histogram(np.clip(x, lo, hi), bins=edges)
    return edges, counts

