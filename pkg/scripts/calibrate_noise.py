"""Sweep measurement noise and report the fraction of good fits per cohort.

    python3 scripts/calibrate_noise.py --sigmas 0.01,0.03,0.06,0.1 --draws 50
"""

import argparse
import logging
import warnings

import numpy as np

from fatiguerate.config import RunConfig
from fatiguerate.estimation import AboveMVCWarning
from fatiguerate.pipeline import fit_records
from fatiguerate.synth import generate_cohort


def good_fraction(sigma, space, draws, n):
    cfg = RunConfig(noise_sigma=sigma, space=space, marker_window_s=1 / 30)
    out, skipped = [], 0
    for seed in range(draws):
        recs = generate_cohort(n, (cfg.k_mean, cfg.k_sd), (cfg.strength_mean, cfg.strength_sd),
                               cfg.coupling, seed, space=space, config=cfg)
        run = fit_records(recs, cfg)
        skipped += len(run.skipped)  # e.g. noisy MVC below the task load; counted as not good
        out.append(sum(r.quality == "good" for r in run.results) / n)
    return float(np.mean(out)), float(np.std(out)), skipped


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigmas", default="0.01,0.02,0.03,0.05,0.08,0.12,0.16")
    ap.add_argument("--space", choices=["moment", "force"], default="moment")
    ap.add_argument("--draws", type=int, default=50)
    ap.add_argument("--n", type=int, default=40)
    args = ap.parse_args()
    warnings.simplefilter("ignore", AboveMVCWarning)
    logging.basicConfig(level=logging.ERROR)
    print(f"space={args.space} cohorts={args.draws} n={args.n}")
    print(f"{'sigma':>7} {'good':>7} {'sd':>7} {'skipped':>8}")
    for s in (float(x) for x in args.sigmas.split(",")):
        m, sd, skipped = good_fraction(s, args.space, args.draws, args.n)
        print(f"{s:7.3f} {m:7.3f} {sd:7.3f} {skipped:8d}")


if __name__ == "__main__":
    main()
