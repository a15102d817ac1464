#!/usr/bin/env python3
"""Sequential vs parallel tuning strategies, compared on fresh samples.

Tunes the same trajectory with both strategies, prints the per-step
conditioning times side by side, then scores both with the moment-based
Frechet distance over replicate evaluation seeds. Run from the repository
root:

    python3 scripts/run_strategy_comparison.py --n 50000 --replicates 3
"""

import argparse
from pathlib import Path

import numpy as np

from steptuner import (
    NoiseSchedule,
    SamplerConfig,
    TunerConfig,
    make_trajectory,
    tune,
)
from steptuner.analysis import draw_start_states, frechet_distance, generate_paths
from steptuner.oracle import gmm8


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50_000, help="samples per replicate")
    ap.add_argument("--replicates", type=int, default=3)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--batch", type=int, default=4096)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=str, default="out/strategy_comparison.csv")
    args = ap.parse_args()

    schedule = NoiseSchedule()
    model = gmm8(schedule)
    sampler = SamplerConfig()
    traj = make_trajectory("quadratic", args.k, schedule)

    tuned = {}
    for strategy in ("sequential", "parallel"):
        cfg = TunerConfig(strategy=strategy, batch=args.batch, seed=args.seed)
        tuned[strategy], _ = tune(cfg, traj, sampler, model, workers=args.workers)

    print("step   t_i        tau_seq    tau_par")
    for i in range(args.k, 0, -1):
        print(
            f"{i:4d} {traj.points[i]:9.3f} "
            f"{tuned['sequential'].taus[i - 1]:10.3f} {tuned['parallel'].taus[i - 1]:10.3f}"
        )

    lines = ["replicate,strategy,fd"]
    scores = {"sequential": [], "parallel": []}
    for r in range(args.replicates):
        x_T = draw_start_states(model, args.n, 100 + r, args.workers)
        data = model.sample_data(args.n, 200 + r, args.workers)
        for strategy in ("sequential", "parallel"):
            path = generate_paths(x_T, tuned[strategy], sampler, model, args.workers)
            fd = frechet_distance(path.states[-1], data)
            scores[strategy].append(fd)
            lines.append(f"{r},{strategy},{fd!r}")

    for strategy, vals in scores.items():
        vals = np.array(vals)
        se = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
        print(f"{strategy:10s} fd = {vals.mean():.4e} +- {se:.1e}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
