#!/usr/bin/env python3
"""Gap accumulation study: coarse rollouts against a dense reference.

For each step count K this script rolls a batch of deterministic paths
with baseline conditioning and with tuned conditioning, measures the mean
distance to a dense 1000-step reference at every checkpoint, and writes
one CSV per (K, variant). Run from the repository root:

    python3 scripts/run_gap_study.py --n 4096 --out-dir out/gap_study
"""

import argparse
from pathlib import Path

from steptuner import (
    NoiseSchedule,
    SamplerConfig,
    TunerConfig,
    baseline_tuned,
    make_trajectory,
    tune,
)
from steptuner.analysis import (
    draw_start_states,
    gap_profile,
    generate_paths,
    reference_path,
)
from steptuner.oracle import gmm8


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=4096, help="number of paths")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--steps", type=int, nargs="+", default=[10, 20])
    ap.add_argument("--batch", type=int, default=4096, help="tuning batch size")
    ap.add_argument("--out-dir", type=str, default="out/gap_study")
    args = ap.parse_args()

    schedule = NoiseSchedule()
    model = gmm8(schedule)
    sampler = SamplerConfig()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    x_T = draw_start_states(model, args.n, args.seed, args.workers)
    reference = reference_path(x_T, model, dense_K=1000)

    for K in args.steps:
        traj = make_trajectory("quadratic", K, schedule)
        base = baseline_tuned(traj, schedule, sampler.kind)
        cfg = TunerConfig(batch=args.batch, seed=args.seed)
        tuned, _ = tune(cfg, traj, sampler, model, workers=args.workers)
        for tag, sched_times in [("baseline", base), ("tuned", tuned)]:
            path = generate_paths(x_T, sched_times, sampler, model, args.workers)
            report = gap_profile(
                path,
                reference,
                tuned=tag == "tuned",
                sampler_kind=sampler.kind,
                trajectory_kind="quadratic",
            )
            dest = out_dir / f"gap_K{K}_{tag}.csv"
            dest.write_text(report.to_csv())
            final = report.rows[0][2]
            print(f"K={K:3d} {tag:8s} final gap {final:.5f} -> {dest}")


if __name__ == "__main__":
    main()
