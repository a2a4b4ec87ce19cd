"""Subject records and the on-disk CSV formats.

subjects.csv  id,age_yr,stature_m,mass_kg,upper_limb_cm,lower_limb_cm[,bmi][,task_load_N]
sessions.csv  subject_id,session_time_s,measured_force_N   (time 0 rows are MVC trials)
markers.csv   subject_id,session_time_s,frame_time_s,sx,sy,sz,ex,ey,ez,wx,wy,wz,dx,dy,dz
truth.csv     subject_id,unit,true_k,true_capacity_max,f_mvc,true_load   (synthetic only)

Times on disk are seconds, forces newtons, positions metres.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .biomech import Anthropometry, MarkerFrame
from .errors import ValidationError
from .estimation import SessionMeasurement

log = logging.getLogger(__name__)

SUBJECT_COLUMNS = ["id", "age_yr", "stature_m", "mass_kg", "upper_limb_cm", "lower_limb_cm"]
SUBJECT_OPTIONAL = ["bmi", "task_load_N"]
SESSION_COLUMNS = ["subject_id", "session_time_s", "measured_force_N"]
MARKER_COLUMNS = ["subject_id", "session_time_s", "frame_time_s",
                  "sx", "sy", "sz", "ex", "ey", "ez", "wx", "wy", "wz", "dx", "dy", "dz"]
TRUTH_COLUMNS = ["subject_id", "unit", "true_k", "true_capacity_max", "f_mvc", "true_load"]
BMI_TOLERANCE = 0.005


class ParseError(ValidationError):
    pass


@dataclass
class SubjectRecord:
    id: str
    age_yr: float
    stature_m: float
    mass_kg: float
    upper_limb_cm: float
    lower_limb_cm: float
    mvc_trials: list = field(default_factory=list)  # N
    sessions: list = field(default_factory=list)  # SessionMeasurement, force-tagged, t > 0
    markers: dict = field(default_factory=dict)  # session_time_s -> [MarkerFrame]
    task_load: float | None = None  # N, force-space relative-load numerator
    stored_bmi: float | None = None
    truth: dict | None = None

    def __post_init__(self):
        self.id = str(self.id)
        for name in ("stature_m", "mass_kg", "upper_limb_cm", "lower_limb_cm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"subject {self.id}: {name} must be positive, got {value}")
        if not (math.isfinite(self.age_yr) and self.age_yr >= 0):
            raise ValidationError(f"subject {self.id}: invalid age {self.age_yr}")
        if self.stored_bmi is not None and abs(self.stored_bmi - self.bmi) > BMI_TOLERANCE * self.bmi:
            raise ValidationError(
                f"subject {self.id}: stored BMI {self.stored_bmi} disagrees with "
                f"mass/stature^2 = {self.bmi:.3f}")
        for v in self.mvc_trials:
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"subject {self.id}: MVC trial must be positive, got {v}")
        times = [m.time_s if m.time_s is not None else m.t * 60 for m in self.sessions]
        dups = sorted({t for t in times if times.count(t) > 1})
        if dups:
            raise ValidationError(
                f"subject {self.id}: duplicate session time(s) {', '.join(f'{t:g}s' for t in dups)}")
        if any(m.t <= 0 for m in self.sessions):
            raise ValidationError(f"subject {self.id}: fatiguing sessions need t > 0")
        self.sessions = sorted(self.sessions, key=lambda m: m.t)

    @property
    def bmi(self) -> float:
        return self.mass_kg / self.stature_m ** 2

    @property
    def mvc(self) -> float | None:
        return max(self.mvc_trials) if self.mvc_trials else None

    def fatiguing_sessions(self) -> list:
        return list(self.sessions)

    def anthropometry(self, coefficients=None) -> Anthropometry:
        kw = {} if coefficients is None else {"coefficients": dict(coefficients)}
        return Anthropometry(self.mass_kg, self.stature_m, self.upper_limb_cm / 100.0,
                             self.lower_limb_cm / 100.0, **kw)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _float(value: str, path, lineno: int, column: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ParseError(f"{path}:{lineno}: column {column!r}: not a number: {value!r}") from None
    if not math.isfinite(out):
        raise ParseError(f"{path}:{lineno}: column {column!r}: non-finite value {value!r}")
    return out


def _rows(path, required):
    """Yield (lineno, row) from a CSV file after checking its header."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        header = [h.strip() for h in header]
        missing = [c for c in required if c not in header]
        if missing:
            raise ParseError(f"{path}:1: missing column(s) {', '.join(missing)}")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, dict(zip(header, (c.strip() for c in row)))


def read_subjects(path) -> dict:
    out = {}
    for lineno, row in _rows(path, SUBJECT_COLUMNS):
        sid = row["id"]
        if not sid:
            raise ParseError(f"{path}:{lineno}: empty subject id")
        if sid in out:
            raise ParseError(f"{path}:{lineno}: duplicate subject id {sid!r}")
        values = {c: _float(row[c], path, lineno, c) for c in SUBJECT_COLUMNS[1:]}
        extra = {}
        if row.get("bmi"):
            extra["stored_bmi"] = _float(row["bmi"], path, lineno, "bmi")
        if row.get("task_load_N"):
            extra["task_load"] = _float(row["task_load_N"], path, lineno, "task_load_N")
        try:
            out[sid] = SubjectRecord(sid, **values, **extra)
        except ValidationError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
    return out


def parse_subjects(subjects_path, sessions_path=None, markers_path=None) -> list:
    """Load and validate subject records, optionally joining sessions and markers.

    Records come back sorted by id.
    """
    records = read_subjects(subjects_path)
    if not records:
        log.warning("%s: no subjects", subjects_path)

    if sessions_path is not None:
        seen = {}
        for lineno, row in _rows(sessions_path, SESSION_COLUMNS):
            sid = row["subject_id"]
            if sid not in records:
                raise ParseError(f"{sessions_path}:{lineno}: unknown subject {sid!r}")
            t = _float(row["session_time_s"], sessions_path, lineno, "session_time_s")
            force = _float(row["measured_force_N"], sessions_path, lineno, "measured_force_N")
            if t < 0:
                raise ParseError(f"{sessions_path}:{lineno}: negative session time")
            if force <= 0:
                raise ParseError(f"{sessions_path}:{lineno}: subject {sid}: force must be positive")
            rec = records[sid]
            if t == 0:
                rec.mvc_trials.append(force)
                continue
            if (sid, t) in seen:
                raise ParseError(
                    f"{sessions_path}:{lineno}: subject {sid}: duplicate session time {t:g}s "
                    f"(first on line {seen[sid, t]})")
            seen[sid, t] = lineno
            rec.sessions.append(SessionMeasurement.from_seconds(t, force))
        for rec in records.values():
            rec.sessions.sort(key=lambda m: m.t)

    if markers_path is not None:
        coords = MARKER_COLUMNS[3:]
        for lineno, row in _rows(markers_path, MARKER_COLUMNS):
            sid = row["subject_id"]
            if sid not in records:
                raise ParseError(f"{markers_path}:{lineno}: unknown subject {sid!r}")
            t = _float(row["session_time_s"], markers_path, lineno, "session_time_s")
            ft = _float(row["frame_time_s"], markers_path, lineno, "frame_time_s")
            xyz = [_float(row[c], markers_path, lineno, c) for c in coords]
            frame = MarkerFrame(xyz[0:3], xyz[3:6], xyz[6:9], xyz[9:12], timestamp=ft)
            records[sid].markers.setdefault(t, []).append(frame)

    return [records[k] for k in sorted(records)]


def _write(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_subjects(path, records) -> None:
    records = sorted(records, key=lambda r: r.id)
    with_load = any(r.task_load is not None for r in records)
    header = SUBJECT_COLUMNS + (["task_load_N"] if with_load else [])
    rows = []
    for r in records:
        row = [r.id, r.age_yr, r.stature_m, r.mass_kg, r.upper_limb_cm, r.lower_limb_cm]
        if with_load:
            row.append("" if r.task_load is None else r.task_load)
        rows.append(row)
    _write(path, header, rows)


def write_sessions(path, records) -> None:
    rows = []
    for r in sorted(records, key=lambda r: r.id):
        rows += [[r.id, 0.0, v] for v in r.mvc_trials]
        rows += [[r.id, m.time_s if m.time_s is not None else m.t * 60, m.value] for m in r.sessions]
    _write(path, SESSION_COLUMNS, rows)


def write_markers(path, records) -> None:
    rows = []
    for r in sorted(records, key=lambda r: r.id):
        for t in sorted(r.markers):
            for f in r.markers[t]:
                rows.append([r.id, t, f.timestamp, *f.s, *f.e, *f.w, *f.d])
    _write(path, MARKER_COLUMNS, [[x if isinstance(x, str) else float(x) for x in row]
                                  for row in rows])


def write_truth(path, records) -> None:
    rows = []
    for r in sorted(records, key=lambda r: r.id):
        if r.truth:
            t = r.truth
            rows.append([r.id, t["unit"], t["true_k"], t["true_capacity_max"], t["f_mvc"],
                         t["true_load"]])
    _write(path, TRUTH_COLUMNS, rows)


def read_truth(path) -> dict:
    out = {}
    for lineno, row in _rows(path, TRUTH_COLUMNS):
        out[row["subject_id"]] = {
            "unit": row["unit"],
            **{c: _float(row[c], path, lineno, c) for c in TRUTH_COLUMNS[2:]},
        }
    return out


def write_dataset(directory, records) -> dict:
    """Write subjects/sessions (and markers, truth when present); return the paths."""
    directory = Path(directory)
    paths = {"subjects": directory / "subjects.csv", "sessions": directory / "sessions.csv"}
    write_subjects(paths["subjects"], records)
    write_sessions(paths["sessions"], records)
    if any(r.markers for r in records):
        paths["markers"] = directory / "markers.csv"
        write_markers(paths["markers"], records)
    if any(r.truth for r in records):
        paths["truth"] = directory / "truth.csv"
        write_truth(paths["truth"], records)
    return paths
