#!/usr/bin/env python3
"""Step replacement sweep: metrics as tuned times replace baseline ones.

Tunes a K-step schedule once, then evaluates the sampler as the first m
steps walked switch from baseline to tuned conditioning, m = 0..K, for a
few seeds. Writes one CSV with columns (seed, m, fd, swd) and prints the
per-seed trend. Run from the repository root:

    python3 scripts/run_replacement_sweep.py --n 50000 --seeds 0 1 2
"""

import argparse
from pathlib import Path

from steptuner import (
    NoiseSchedule,
    SamplerConfig,
    TunerConfig,
    make_trajectory,
    tune,
)
from steptuner.analysis import step_replacement_sweep
from steptuner.oracle import gmm8


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=50_000, help="samples per metric")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--batch", type=int, default=4096, help="tuning batch size")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=str, default="out/replacement_sweep.csv")
    args = ap.parse_args()

    schedule = NoiseSchedule()
    model = gmm8(schedule)
    sampler = SamplerConfig()
    traj = make_trajectory("quadratic", args.k, schedule)
    cfg = TunerConfig(batch=args.batch, seed=args.seeds[0])
    tuned, _ = tune(cfg, traj, sampler, model, workers=args.workers)

    lines = ["seed,m,fd,swd"]
    for seed in args.seeds:
        reports = step_replacement_sweep(
            traj, tuned, sampler, model, args.n, seed=seed, workers=args.workers
        )
        fds = [r.frechet for r in reports]
        for m, rep in enumerate(reports):
            lines.append(f"{seed},{m},{rep.frechet!r},{rep.sliced_wasserstein!r}")
        noninc = sum(fds[m + 1] <= fds[m] for m in range(args.k))
        print(
            f"seed {seed}: fd {fds[0]:.3e} -> {fds[-1]:.3e}, "
            f"non-increasing at {noninc}/{args.k} increments"
        )

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
