"""Command-line entry point.

    fatiguerate simulate --out data/
    fatiguerate fit --subjects data/subjects.csv --sessions data/sessions.csv \
        --markers data/markers.csv --out results/
    fatiguerate stats --fits results/fits.csv --subjects data/subjects.csv --out results/
    fatiguerate moment --subjects data/subjects.csv --markers data/markers.csv --out results/
    fatiguerate report ...            (fit followed by stats)

Every RunConfig key can be set in a TOML file (``--config``) or as a flag;
flags win. Exit codes: 0 success, 1 validation error, 2 computation degeneracy.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import MISSING, fields
from pathlib import Path

from .biomech import SegmentForces
from .config import RunConfig
from .errors import DegeneracyError, ValidationError
from .pipeline import (
    cmd_fit,
    cmd_moment,
    cmd_simulate,
    cmd_stats,
    fit_rows_from_results,
    read_fits,
)
from .records import parse_subjects
from .stats import t_test_from_summary

log = logging.getLogger("fatiguerate")


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration (override --config)")
    for f in fields(RunConfig):
        default = f.default if f.default is not MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, bool):
            kind = _bool
        elif isinstance(default, int):
            kind = int
        elif isinstance(default, float):
            kind = float
        elif isinstance(default, tuple):
            kind = _floats
        elif isinstance(default, dict):
            kind = json.loads
        else:
            kind = str
        dest = "cfg_" + f.name
        if f.name == "output_dir":
            group.add_argument("--out", "--output-dir", dest=dest, type=kind, default=None)
        else:
            group.add_argument(flag, dest=dest, type=kind, default=None, metavar=type(default).__name__.upper())


def _load_config(args) -> RunConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_")}
    return RunConfig.load(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="flat TOML config file")
    common.add_argument("-v", "--verbose", action="store_true")
    _config_flags(common)

    parser = argparse.ArgumentParser(prog="fatiguerate", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="write a synthetic cohort")

    for name, helptext in (("fit", "fit fatigue rates per subject"),
                           ("report", "fit, then cohort statistics")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--subjects", type=Path, required=True)
        p.add_argument("--sessions", type=Path, required=True)
        p.add_argument("--markers", type=Path, default=None)

    p = sub.add_parser("stats", parents=[common], help="cohort statistics from fits.csv")
    p.add_argument("--fits", type=Path, default=None)
    p.add_argument("--subjects", type=Path, default=None)
    p.add_argument("--from-summaries", type=float, nargs=6, default=None,
                   metavar=("A_MEAN", "A_SD", "A_N", "B_MEAN", "B_SD", "B_N"),
                   help="only run the group t-test on given summary statistics")

    p = sub.add_parser("moment", parents=[common], help="per-frame moment load and posture")
    p.add_argument("--subjects", type=Path, required=True)
    p.add_argument("--markers", type=Path, required=True)
    p.add_argument("--forces", type=Path, default=None,
                   help="JSON with G_u, G_f, G_m, F_d vectors (N) used for every frame")
    return parser


def _run(args) -> int:
    config = _load_config(args)
    out = Path(config.output_dir)

    if args.command == "simulate":
        paths = cmd_simulate(config, out)
        for p in paths.values():
            print(p)
        return 0

    if args.command in ("fit", "report"):
        records = parse_subjects(args.subjects, args.sessions, args.markers)
        inputs = [args.subjects, args.sessions, args.markers]
        run = cmd_fit(records, config, out, inputs=inputs)
        print(f"fitted {len(run.results)} subject(s), skipped {len(run.skipped)}")
        if args.command == "report" and run.results:
            cmd_stats(fit_rows_from_results(run.results), records, config, out, inputs=inputs)
            print((out / "report.txt").read_text(encoding="utf-8"), end="")
        return run.exit_code

    if args.command == "stats":
        if args.from_summaries is not None:
            ma, sa, na, mb, sb, nb = args.from_summaries
            cmp = t_test_from_summary(ma, sa, int(na), mb, sb, int(nb), config.t_test)
            alt = cmp.alternate
            print(f"{cmp.variant}: t={cmp.t_statistic:.4f} df={cmp.df:.3f} p={cmp.p_value:.3g}")
            print(f"{alt['variant']}: t={alt['t_statistic']:.4f} df={alt['df']:.3f} "
                  f"p={alt['p_value']:.3g}")
            return 0
        if args.fits is None or args.subjects is None:
            raise ValidationError("stats needs --fits and --subjects (or --from-summaries)")
        records = parse_subjects(args.subjects)
        cmd_stats(read_fits(args.fits), records, config, out, inputs=[args.fits, args.subjects])
        print((out / "report.txt").read_text(encoding="utf-8"), end="")
        return 0

    if args.command == "moment":
        records = parse_subjects(args.subjects, markers_path=args.markers)
        forces = None
        if args.forces is not None:
            spec = json.loads(args.forces.read_text(encoding="utf-8"))
            try:
                forces = SegmentForces(spec["G_u"], spec["G_f"], spec["G_m"], spec["F_d"])
            except KeyError as exc:
                raise ValidationError(f"{args.forces}: missing force {exc}") from None
        rows = cmd_moment(records, config, out, forces, inputs=[args.subjects, args.markers])
        print(f"wrote {len(rows)} frame(s) to {out / 'moments.csv'}")
        return 0
    raise AssertionError(args.command)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DegeneracyError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
