"""Simulate a cohort, fit it and print summary numbers next to reference values.

    python3 scripts/reproduce_cohort.py --seed 1 --out runs/seed1
"""

import argparse
import logging
import tempfile
from pathlib import Path

import numpy as np

from fatiguerate.config import RunConfig
from fatiguerate.pipeline import cmd_fit, cmd_simulate, cmd_stats, fit_rows_from_results
from fatiguerate.records import parse_subjects
from fatiguerate.stats import summarize

# target cohort numbers the generator is anchored to
REFERENCE = {
    "k mean": 1.02,
    "k sd": 0.49,
    "good fits of 40": 35,
    "r(k, strength)": 0.616,
    "group A strength": 60.8,
    "group B strength": 37.7,
    "t fatigue rate": 4.628,
}


def run(config, out):
    paths = cmd_simulate(config, out / "data")
    records = parse_subjects(paths["subjects"], paths["sessions"], paths.get("markers"))
    fit = cmd_fit(records, config, out / "results")
    stats = cmd_stats(fit_rows_from_results(fit.results), records, config, out / "results")
    k = summarize([r.k_hat for r in fit.results])
    cols = stats.correlation.columns
    i, j = cols.index("fatigue_rate"), cols.index("joint_moment_strength")
    got = {
        "k mean": k.mean,
        "k sd": k.sd,
        "good fits of 40": sum(r.quality == "good" for r in fit.results) * 40 / len(fit.results),
        "r(k, strength)": stats.correlation.r[i, j],
    }
    if stats.groups:
        g = stats.groups["joint_moment_strength"]
        got["group A strength"] = g.group_a.mean
        got["group B strength"] = g.group_b.mean
        got["t fatigue rate"] = stats.groups["fatigue_rate"].t_statistic
    return got


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--seeds", type=int, default=1, help="average over this many seeds")
    ap.add_argument("--space", choices=["moment", "force"], default="moment")
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.ERROR)

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for s in range(args.seed, args.seed + args.seeds):
            out = (args.out or Path(tmp)) / f"seed{s}"
            rows.append(run(RunConfig(seed=s, space=args.space, marker_window_s=1 / 30), out))
    print(f"{'quantity':<20}{'reference':>11}{'simulated':>11}")
    for key, ref in REFERENCE.items():
        vals = [r[key] for r in rows if key in r]
        print(f"{key:<20}{ref:>11.3f}{np.mean(vals) if vals else float('nan'):>11.3f}")


if __name__ == "__main__":
    main()
