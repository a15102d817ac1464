"""Command-line entry points: tune, sample, gap, sweep, eval.

Every subcommand reads one JSON config, writes plain CSV or JSON outputs
plus a ``<name>.meta.json`` sidecar echoing the exact settings used, and
is byte-for-byte reproducible given (config, seeds). Exit codes: 0 on
success, 2 for config problems, 3 for domain or contract violations, 4
for numeric failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    draw_start_states,
    evaluate_samples,
    gap_profile,
    generate_paths,
    reference_path,
    step_replacement_sweep,
)
from .config import ExperimentConfig, Seeds, load_config
from .errors import ConfigError, ContractError, StepTunerError
from .samplers import SamplerConfig
from .trajectory import baseline_tuned, tuned_from_json, tuned_to_json
from .tuner import tune as run_tune

_DENSE_K = 1000


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steptuner",
        description="Tune and evaluate conditioning times for few-step samplers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subcommands = {
        "tune": "search per-step conditioning times and write them to JSON + CSV",
        "sample": "draw final samples with the baseline or a tuned sampler",
        "gap": "pathwise gap to a dense reference at every checkpoint",
        "sweep": "metrics as tuned times replace baseline ones step by step",
        "eval": "distribution metrics of generated samples against fresh data",
    }
    defaults_n = {"sample": 1024, "gap": 1024, "sweep": 2048, "eval": 2048}
    for name, help_text in subcommands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=str, default=None, help="JSON config path")
        p.add_argument("--tuned", type=str, default=None, help="tuned-times JSON path")
        p.add_argument("--out", type=str, default=None, help="primary output path")
        p.add_argument("--seed", type=int, default=None, help="override config seeds")
        p.add_argument("--workers", type=int, default=1, help="MC worker count")
        p.add_argument(
            "--n", type=int, default=defaults_n.get(name, 1024), help="sample count"
        )
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        s = args.seed
        cfg = replace(
            cfg,
            seeds=Seeds(sample=s, data=s + 1, eval=s + 2),
            tuner=replace(cfg.tuner, seed=s),
        )
    if args.workers < 1:
        raise ConfigError("--workers must be a positive integer")
    if args.n < 0:
        raise ConfigError("--n must be non-negative")
    return cfg


def _runtime(cfg: ExperimentConfig):
    schedule = cfg.schedule.build()
    model = cfg.oracle.build(schedule)
    traj = cfg.trajectory.build(schedule)
    sampler = SamplerConfig(
        kind=cfg.sampler.kind, eta=cfg.sampler.eta, seed=cfg.seeds.sample
    )
    return schedule, model, traj, sampler


def _load_tuned(args, traj, schedule, sampler):
    if args.tuned is None:
        return baseline_tuned(traj, schedule, sampler.kind), False
    path = Path(args.tuned)
    if not path.exists():
        raise ConfigError(f"tuned file not found: {path}")
    tuned = tuned_from_json(path.read_text())
    if tuned.sampler_kind != sampler.kind:
        raise ContractError(
            f"tuned file targets sampler {tuned.sampler_kind!r}, "
            f"config uses {sampler.kind!r}"
        )
    if tuned.base.K != traj.K or not np.allclose(
        tuned.base.points, traj.points, rtol=0, atol=1e-9 * schedule.T
    ):
        raise ContractError("tuned file trajectory does not match the config")
    return tuned, True


def _out_path(args, cfg: ExperimentConfig, default_name: str) -> Path:
    if args.out is not None:
        path = Path(args.out)
    else:
        path = Path(cfg.out_dir) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_meta(path: Path, command: str, cfg: ExperimentConfig, args, outputs) -> None:
    meta = {
        "tool": "steptuner",
        "version": __version__,
        "command": command,
        "config": cfg.to_dict(),
        "overrides": {
            "seed": args.seed,
            "n": args.n,
            "workers": args.workers,
            "tuned": args.tuned,
        },
        "outputs": [str(p) for p in outputs],
    }
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _records_csv(records) -> str:
    lines = ["i,t_i,tau_i,loss_baseline,loss_tuned,stderr,boundary_flag"]
    for r in records:
        lines.append(
            f"{r.step},{r.t_site!r},{r.tau!r},{r.loss_baseline!r},"
            f"{r.loss_tuned!r},{r.stderr!r},{int(r.boundary)}"
        )
    return "\n".join(lines) + "\n"


def _matrix_csv(x: np.ndarray) -> str:
    rows = [",".join(repr(float(v)) for v in row) for row in np.atleast_2d(x)]
    return ("\n".join(rows) + "\n") if rows else ""


def cmd_tune(args) -> int:
    cfg = _load(args)
    schedule, model, traj, sampler = _runtime(cfg)
    tuned, records = run_tune(cfg.tuner, traj, sampler, model, workers=args.workers)
    out = _out_path(args, cfg, "tuned.json")
    out.write_text(tuned_to_json(tuned, schedule))
    csv_path = out.with_suffix(".csv")
    csv_path.write_text(_records_csv(records))
    _write_meta(out, "tune", cfg, args, [out, csv_path])
    print(f"wrote {out} and {csv_path}")
    return 0


def cmd_sample(args) -> int:
    cfg = _load(args)
    schedule, model, traj, sampler = _runtime(cfg)
    tuned, _ = _load_tuned(args, traj, schedule, sampler)
    out = _out_path(args, cfg, "samples.csv")
    if args.n == 0:
        out.write_text("")
    else:
        x_T = draw_start_states(model, args.n, cfg.seeds.sample, args.workers)
        path = generate_paths(x_T, tuned, sampler, model, args.workers)
        out.write_text(_matrix_csv(path.states[-1]))
    _write_meta(out, "sample", cfg, args, [out])
    print(f"wrote {out}")
    return 0


def cmd_gap(args) -> int:
    cfg = _load(args)
    schedule, model, traj, sampler = _runtime(cfg)
    tuned, is_tuned = _load_tuned(args, traj, schedule, sampler)
    x_T = draw_start_states(model, args.n, cfg.seeds.sample, args.workers)
    coarse = generate_paths(x_T, tuned, sampler, model, args.workers)
    reference = reference_path(x_T, model, _DENSE_K, t_min=float(traj.points[0]))
    report = gap_profile(
        coarse,
        reference,
        tuned=is_tuned,
        sampler_kind=sampler.kind,
        trajectory_kind=cfg.trajectory.kind,
    )
    out = _out_path(args, cfg, "gap.csv")
    out.write_text(report.to_csv())
    _write_meta(out, "gap", cfg, args, [out])
    print(f"wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    schedule, model, traj, sampler = _runtime(cfg)
    if args.tuned is None:
        raise ConfigError("sweep requires --tuned")
    tuned, _ = _load_tuned(args, traj, schedule, sampler)
    reports = step_replacement_sweep(
        traj, tuned, sampler, model, args.n, seed=cfg.seeds.sample, workers=args.workers
    )
    lines = ["m,fd,swd"]
    for m, rep in enumerate(reports):
        lines.append(f"{m},{rep.frechet!r},{rep.sliced_wasserstein!r}")
    out = _out_path(args, cfg, "sweep.csv")
    out.write_text("\n".join(lines) + "\n")
    _write_meta(out, "sweep", cfg, args, [out])
    print(f"wrote {out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load(args)
    schedule, model, traj, sampler = _runtime(cfg)
    tuned, is_tuned = _load_tuned(args, traj, schedule, sampler)
    if args.n < model.dim + 1:
        raise ConfigError(f"--n must be at least dim+1 = {model.dim + 1} for eval")
    x_T = draw_start_states(model, args.n, cfg.seeds.sample, args.workers)
    path = generate_paths(x_T, tuned, sampler, model, args.workers)
    data = model.sample_data(args.n, cfg.seeds.data, args.workers)
    report = evaluate_samples(path.states[-1], data, seed=cfg.seeds.eval)
    doc = dict(report.to_dict(), tuned=is_tuned)
    out = _out_path(args, cfg, "eval.json")
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write_meta(out, "eval", cfg, args, [out])
    print(f"wrote {out}")
    return 0


_COMMANDS = {
    "tune": cmd_tune,
    "sample": cmd_sample,
    "gap": cmd_gap,
    "sweep": cmd_sweep,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except StepTunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
