"""Subcommand implementations: simulate, fit, stats, moment, report.

Each ``cmd_*`` function takes parsed inputs plus a :class:`RunConfig`, writes
its outputs under ``out_dir`` and returns what it computed. Output rows are
ordered by subject id and contain no timestamps, so identical inputs produce
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .biomech import (
    SegmentForces,
    drill_direction,
    moment_load,
    posture_angles,
    segment_forces_from_anthropometry,
)
from .config import RunConfig
from .errors import DegeneracyError, ValidationError
from .estimation import FitResult, fit_subject
from .records import ParseError, _rows, _write, write_dataset
from .stats import (
    CohortTable,
    correlation_matrix,
    histogram,
    split_by_strength,
    summarize,
    t_test,
)
from .synth import generate_cohort

log = logging.getLogger(__name__)

FIT_COLUMNS = ["subject_id", "unit", "k_per_min", "k_per_s", "r_squared", "f_mvc",
               "capacity_max", "load", "n_points", "quality", "flags"]
COHORT_COLUMNS = ["fatigue_rate", "bmi", "joint_moment_strength", "age"]


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def write_manifest(out_dir, command: str, config: RunConfig, inputs=(), outputs=(), **extra):
    manifest = {
        "command": command,
        "config_digest": config.digest(),
        "config": {k: v for k, v in config.to_dict().items() if k != "output_dir"},
        "inputs": {Path(p).name: _file_digest(p) for p in inputs if p is not None},
        "outputs": sorted(Path(p).name for p in outputs),
        **extra,
    }
    path = Path(out_dir) / f"manifest_{command}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# -- simulate ---------------------------------------------------------------

def cmd_simulate(config: RunConfig, out_dir) -> dict:
    if config.n_subjects < 1:
        raise ValidationError("n_subjects must be at least 1; an empty dataset is not useful")
    space = "force" if config.space == "force" else "moment"
    records = generate_cohort(
        config.n_subjects,
        (config.k_mean, config.k_sd),
        (config.strength_mean, config.strength_sd),
        config.coupling,
        config.seed,
        space=space,
        config=config,
    )
    paths = write_dataset(out_dir, records)
    write_manifest(out_dir, "simulate", config, outputs=paths.values(),
                   n_subjects=len(records), space=space)
    return paths


# -- fit --------------------------------------------------------------------

@dataclass
class FitRun:
    results: list
    skipped: list = field(default_factory=list)  # (subject id, error kind, message)

    @property
    def exit_code(self) -> int:
        kinds = {kind for _, kind, _ in self.skipped}
        if "validation" in kinds:
            return 1
        if "degeneracy" in kinds:
            return 2
        return 0


def fit_records(records, config: RunConfig) -> FitRun:
    run = FitRun([])
    for rec in sorted(records, key=lambda r: r.id):
        try:
            run.results.append(fit_subject(rec, config))
        except ValidationError as exc:
            run.skipped.append((rec.id, "validation", str(exc)))
        except DegeneracyError as exc:
            run.skipped.append((rec.id, "degeneracy", str(exc)))
    for sid, kind, msg in run.skipped:
        log.warning("skipped %s (%s): %s", sid, kind, msg)
    return run


def _num(x) -> str | float:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return float(x)


def write_fits(path, results) -> None:
    rows = []
    for r in sorted(results, key=lambda r: r.subject_id):
        rows.append([r.subject_id, r.unit.value, _num(r.k_hat), _num(r.k_per_second),
                     _num(r.r_squared), _num(r.f_mvc_used), _num(r.mvc_used), _num(r.load_used),
                     r.n_points, r.quality, ";".join(r.flags)])
    _write(path, FIT_COLUMNS, rows)


def read_fits(path) -> list:
    rows = []
    for lineno, row in _rows(path, FIT_COLUMNS):
        try:
            rows.append({
                "subject_id": row["subject_id"],
                "unit": row["unit"],
                "k": float(row["k_per_min"]),
                "r_squared": float(row["r_squared"]),
                "f_mvc": float(row["f_mvc"]),
                "capacity_max": float(row["capacity_max"]),
                "quality": row["quality"],
            })
        except ValueError:
            raise ParseError(f"{path}:{lineno}: malformed fit row") from None
    return rows


def _summary_rows(label, values):
    values = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if values.size == 0:
        return [label, 0, "nan", "nan", "nan", "nan"]
    s = summarize(values)
    return [label, s.n, s.mean, s.sd, s.min, s.max]


def fit_summary_rows(results, good_only: bool = False):
    """Rows mirroring the fatigue-rate table: strength, k and R²."""
    chosen = [r for r in results if (r.quality == "good" or not good_only)]
    subset = "good" if good_only else "all"
    out = []
    for item, getter in (("capacity_max", lambda r: r.mvc_used), ("k", lambda r: r.k_hat),
                         ("r_squared", lambda r: r.r_squared)):
        out.append([subset] + _summary_rows(item, [getter(r) for r in chosen]))
    return out


def cmd_fit(records, config: RunConfig, out_dir, inputs=()) -> FitRun:
    out_dir = Path(out_dir)
    run = fit_records(records, config)
    fits_path = out_dir / "fits.csv"
    summary_path = out_dir / "summary.csv"
    write_fits(fits_path, run.results)
    rows = fit_summary_rows(run.results) + fit_summary_rows(run.results, good_only=True)
    _write(summary_path, ["subset", "item", "n", "mean", "sd", "min", "max"], rows)
    quality = {b: sum(r.quality == b for r in run.results)
               for b in ("good", "fair", "poor", "undefined")}
    write_manifest(out_dir, "fit", config, inputs=inputs, outputs=[fits_path, summary_path],
                   n_fitted=len(run.results), quality=quality,
                   skipped=[{"id": s, "kind": k, "reason": m} for s, k, m in run.skipped])
    return run


# -- stats ------------------------------------------------------------------

def cohort_table(fit_rows, records) -> CohortTable:
    by_id = {r.id: r for r in records}
    rows = [f for f in fit_rows if not math.isnan(f["r_squared"])]
    ids = [f["subject_id"] for f in rows]
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ValidationError(f"fit rows without subject records: {', '.join(missing)}")
    return CohortTable(ids, {
        "fatigue_rate": [f["k"] for f in rows],
        "joint_moment_strength": [f["capacity_max"] for f in rows],
        "r_squared": [f["r_squared"] for f in rows],
        "age": [by_id[i].age_yr for i in ids],
        "bmi": [by_id[i].bmi for i in ids],
    })


@dataclass
class StatsRun:
    table: CohortTable
    correlation: object
    groups: dict
    group_ids: tuple


def _comparison_row(name, cmp):
    a, b = cmp.group_a, cmp.group_b
    alt = cmp.alternate
    return [name, a.mean, a.sd, a.n, b.mean, b.sd, b.n, cmp.variant, cmp.t_statistic, cmp.df,
            cmp.p_value, cmp.p_one_sided, alt["variant"], alt["t_statistic"], alt["df"],
            alt["p_value"]]


def cmd_stats(fit_rows, records, config: RunConfig, out_dir, inputs=()) -> StatsRun:
    if not fit_rows:
        raise ValidationError("fit output is empty")
    out_dir = Path(out_dir)
    table = cohort_table(fit_rows, records)
    if len(table) == 0:
        raise DegeneracyError("no subjects with a defined fit")
    corr = correlation_matrix(table, COHORT_COLUMNS)
    corr_rows = []
    for i, ci in enumerate(corr.columns):
        for j, cj in enumerate(corr.columns):
            corr_rows.append([ci, cj, _num(corr.r[i, j]), _num(corr.p[i, j]), int(corr.n[i, j])])
    outputs = [out_dir / "correlation.csv"]
    _write(outputs[0], ["row", "column", "r", "p", "n"], corr_rows)

    groups, group_ids = {}, ((), ())
    if len(table) >= 2 * config.group_size:
        a_ids, b_ids = split_by_strength(table, config.group_size)
        group_ids = (tuple(a_ids), tuple(b_ids))
        a_tab, b_tab = table.subset(a_ids), table.subset(b_ids)
        for name in ("fatigue_rate", "joint_moment_strength", "age", "bmi"):
            groups[name] = t_test(a_tab.column(name), b_tab.column(name), config.t_test)
        outputs.append(out_dir / "groups.csv")
        _write(outputs[-1], ["variable", "a_mean", "a_sd", "a_n", "b_mean", "b_sd", "b_n",
                             "variant", "t", "df", "p", "p_one_sided", "alt_variant", "alt_t",
                             "alt_df", "alt_p"],
               [_comparison_row(k, v) for k, v in groups.items()])
        _write(out_dir / "groups_members.csv", ["group", "subject_id"],
               [["A", i] for i in a_ids] + [["B", i] for i in b_ids])
        outputs.append(out_dir / "groups_members.csv")
    else:
        log.warning("only %d subjects; group comparison needs %d", len(table), 2 * config.group_size)

    edges, counts = histogram(table.column("r_squared"), config.r2_bin_width, 0.0, 1.0)
    outputs.append(out_dir / "hist_r2.csv")
    _write(outputs[-1], ["bin_lo", "bin_hi", "count"],
           [[float(lo), float(hi), int(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts)])
    edges, counts = histogram(table.column("fatigue_rate"), config.k_bin_width, 0.0, config.k_bin_max)
    outputs.append(out_dir / "hist_k.csv")
    _write(outputs[-1], ["bin_lo", "bin_hi", "count"],
           [[float(lo), float(hi), int(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts)])

    run = StatsRun(table, corr, groups, group_ids)
    report = out_dir / "report.txt"
    report.write_text(render_report(run, config), encoding="utf-8")
    outputs.append(report)
    write_manifest(out_dir, "stats", config, inputs=inputs, outputs=outputs, n_subjects=len(table))
    return run


def _f(x, spec=".3f"):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def render_report(run: StatsRun, config: RunConfig) -> str:
    t = run.table
    lines = [f"config {config.digest()}", "", "Fatigue rate table (all subjects)",
             f"{'item':<24}{'n':>4}{'mean':>9}{'sd':>9}{'min':>9}{'max':>9}"]
    for item in ("joint_moment_strength", "fatigue_rate", "r_squared"):
        s = summarize(t.column(item))
        lines.append(f"{item:<24}{s.n:>4}{_f(s.mean):>9}{_f(s.sd):>9}{_f(s.min):>9}{_f(s.max):>9}")
    lines += ["", "Correlation matrix (r, two-sided p)"]
    c = run.correlation
    lines.append(" " * 24 + "".join(f"{name:>24}" for name in c.columns))
    for i, ci in enumerate(c.columns):
        cells = "".join(f"{_f(c.r[i, j]) + ' (p=' + _f(c.p[i, j], '.3g') + ')':>24}"
                        for j in range(len(c.columns)))
        lines.append(f"{ci:<24}{cells}")
    if run.groups:
        lines += ["", f"Strength groups (n={config.group_size} each), {config.t_test} t-test"]
        for name, cmp in run.groups.items():
            lines.append(
                f"{name:<24}A {_f(cmp.group_a.mean)} ({_f(cmp.group_a.sd)})  "
                f"B {_f(cmp.group_b.mean)} ({_f(cmp.group_b.sd)})  "
                f"t={_f(cmp.t_statistic)} df={_f(cmp.df, '.1f')} p={_f(cmp.p_value, '.3g')}")
    return "\n".join(lines) + "\n"


# -- moment -----------------------------------------------------------------

def cmd_moment(records, config: RunConfig, out_dir, forces: SegmentForces | None = None,
               inputs=()) -> list:
    """Per-frame shoulder moment load and posture angles for every marker frame."""
    rows = []
    direction = drill_direction(config.beam_inclination_deg)
    for rec in sorted(records, key=lambda r: r.id):
        if not rec.markers:
            continue
        anthro = rec.anthropometry(config.segment_coefficients)
        task = forces or segment_forces_from_anthropometry(
            anthro, config.machine_mass_kg, config.drill_force_n, direction)
        for t in sorted(rec.markers):
            for frame in rec.markers[t]:
                m = moment_load(frame, task, load_points=config.load_points, anthro=anthro)
                p = posture_angles(frame)
                rows.append([rec.id, float(t), frame.timestamp, m.flexion, m.out_of_plane,
                             p.q1, p.q2])
    if not rows:
        raise ValidationError("no marker frames to process")
    path = Path(out_dir) / "moments.csv"
    _write(path, ["subject_id", "session_time_s", "frame_time_s", "moment_load_Nm",
                  "out_of_plane_Nm", "shoulder_flexion_deg", "elbow_flexion_deg"], rows)
    write_manifest(out_dir, "moment", config, inputs=inputs, outputs=[path], n_frames=len(rows))
    return rows


def fit_rows_from_results(results: list[FitResult]) -> list:
    return [{"subject_id": r.subject_id, "unit": r.unit.value, "k": r.k_hat,
             "r_squared": r.r_squared, "f_mvc": r.f_mvc_used, "capacity_max": r.mvc_used,
             "quality": r.quality} for r in results]
