"""Run configuration: typed blocks, JSON round-trip, named presets.

A run is described by one JSON document with blocks for the noise
schedule, the data oracle, the checkpoint trajectory, the sampler, the
tuner, seeds, and an output directory. Every block validates against the
same contracts the library enforces, and parse errors name the offending
field by dotted path (for example "tuner.batch").
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .oracle import ORACLE_PRESETS, GaussianMixtureOracle
from .samplers import SAMPLER_KINDS
from .schedule import T_EPS_FRACTION, NoiseSchedule
from .trajectory import TRAJECTORY_KINDS, Trajectory, make_trajectory
from .tuner import TunerConfig


@dataclass(frozen=True)
class ScheduleBlock:
    kind: str = "linear-vp"
    beta_min: float = 1e-4
    beta_max: float = 0.02
    T: float = 1000.0

    def build(self) -> NoiseSchedule:
        return NoiseSchedule(
            beta_min=self.beta_min, beta_max=self.beta_max, T=self.T, kind=self.kind
        )


@dataclass(frozen=True)
class OracleBlock:
    preset: str = "gmm8"
    dim: int = 2  # used by the "standard" preset
    means: list = field(default_factory=list)  # explicit mixture overrides preset
    scales: list = field(default_factory=list)
    weights: list = field(default_factory=list)

    @property
    def explicit(self) -> bool:
        return bool(self.means)

    def build(self, schedule: NoiseSchedule) -> GaussianMixtureOracle:
        if self.explicit:
            return GaussianMixtureOracle(
                schedule=schedule,
                means=np.asarray(self.means, dtype=float),
                scales=np.asarray(self.scales, dtype=float),
                weights=np.asarray(self.weights, dtype=float),
            )
        maker = ORACLE_PRESETS[self.preset]
        if self.preset == "standard":
            return maker(schedule, dim=self.dim)
        return maker(schedule)


@dataclass(frozen=True)
class TrajectoryBlock:
    kind: str = "quadratic"
    K: int = 10
    t_min: float = 0.0

    def build(self, schedule: NoiseSchedule) -> Trajectory:
        return make_trajectory(self.kind, self.K, schedule, t_min=self.t_min)


@dataclass(frozen=True)
class SamplerBlock:
    kind: str = "ddim-family"
    eta: float = 0.0


@dataclass(frozen=True)
class Seeds:
    sample: int = 0
    data: int = 1
    eval: int = 2


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: ScheduleBlock = field(default_factory=ScheduleBlock)
    oracle: OracleBlock = field(default_factory=OracleBlock)
    trajectory: TrajectoryBlock = field(default_factory=TrajectoryBlock)
    sampler: SamplerBlock = field(default_factory=SamplerBlock)
    tuner: TunerConfig = field(default_factory=TunerConfig)
    seeds: Seeds = field(default_factory=Seeds)
    out_dir: str = "out"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value

def _take(block: dict, key: str, path: str, kind, default):
    if key not in block:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    value = block.pop(key)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}.{key}: expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}.{key}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}.{key}: expected a list, got {value!r}")
        return value
    raise AssertionError(f"unknown field kind {kind}")


def _reject_unknown(block: dict, path: str) -> None:
    if block:
        key = sorted(block)[0]
        raise ConfigError(f"{path}.{key}: unknown field")


_REQUIRED = object()


def _choice(value: str, choices, path: str) -> str:
    if value not in choices:
        raise ConfigError(f"{path}: must be one of {sorted(choices)}, got {value!r}")
    return value


def config_from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(_expect_mapping(doc, "config"))
    cfg = ExperimentConfig()

    if "schedule" in doc:
        b = dict(_expect_mapping(doc.pop("schedule"), "schedule"))
        sched = ScheduleBlock(
            kind=_choice(
                _take(b, "kind", "schedule", str, "linear-vp"),
                ("linear-vp",),
                "schedule.kind",
            ),
            beta_min=_take(b, "beta_min", "schedule", float, 1e-4),
            beta_max=_take(b, "beta_max", "schedule", float, 0.02),
            T=_take(b, "T", "schedule", float, 1000.0),
        )
        _reject_unknown(b, "schedule")
        if not 0.0 < sched.beta_min < sched.beta_max:
            raise ConfigError("schedule.beta_min: need 0 < beta_min < beta_max")
        if sched.T <= 0.0:
            raise ConfigError("schedule.T: must be positive")
        cfg = replace(cfg, schedule=sched)

    if "oracle" in doc:
        b = dict(_expect_mapping(doc.pop("oracle"), "oracle"))
        oracle = OracleBlock(
            preset=_choice(
                _take(b, "preset", "oracle", str, "gmm8"),
                tuple(ORACLE_PRESETS),
                "oracle.preset",
            ),
            dim=_take(b, "dim", "oracle", int, 2),
            means=_take(b, "means", "oracle", list, []),
            scales=_take(b, "scales", "oracle", list, []),
            weights=_take(b, "weights", "oracle", list, []),
        )
        _reject_unknown(b, "oracle")
        if oracle.dim < 1:
            raise ConfigError("oracle.dim: must be a positive integer")
        if oracle.explicit and not (oracle.scales and oracle.weights):
            raise ConfigError(
                "oracle.means: explicit mixtures need means, scales and weights"
            )
        cfg = replace(cfg, oracle=oracle)

    if "trajectory" in doc:
        b = dict(_expect_mapping(doc.pop("trajectory"), "trajectory"))
        traj = TrajectoryBlock(
            kind=_choice(
                _take(b, "kind", "trajectory", str, "quadratic"),
                TRAJECTORY_KINDS,
                "trajectory.kind",
            ),
            K=_take(b, "K", "trajectory", int, 10),
            t_min=_take(b, "t_min", "trajectory", float, 0.0),
        )
        _reject_unknown(b, "trajectory")
        if traj.K < 1:
            raise ConfigError("trajectory.K: must be a positive integer")
        if not 0.0 <= traj.t_min < cfg.schedule.T:
            raise ConfigError("trajectory.t_min: must lie in [0, T)")
        cfg = replace(cfg, trajectory=traj)

    if "sampler" in doc:
        b = dict(_expect_mapping(doc.pop("sampler"), "sampler"))
        sampler = SamplerBlock(
            kind=_choice(
                _take(b, "kind", "sampler", str, "ddim-family"),
                SAMPLER_KINDS,
                "sampler.kind",
            ),
            eta=_take(b, "eta", "sampler", float, 0.0),
        )
        _reject_unknown(b, "sampler")
        if not 0.0 <= sampler.eta <= 1.0:
            raise ConfigError("sampler.eta: must lie in [0, 1]")
        cfg = replace(cfg, sampler=sampler)

    if "tuner" in doc:
        b = dict(_expect_mapping(doc.pop("tuner"), "tuner"))
        kwargs = {
            "strategy": _choice(
                _take(b, "strategy", "tuner", str, "sequential"),
                ("sequential", "parallel"),
                "tuner.strategy",
            ),
            "batch": _take(b, "batch", "tuner", int, 4096),
            "coarse_grid": _take(b, "coarse_grid", "tuner", int, 33),
            "refine_tol": _take(b, "refine_tol", "tuner", float, 0.01),
            "bounds": _choice(
                _take(b, "bounds", "tuner", str, "interval"),
                ("interval", "wide"),
                "tuner.bounds",
            ),
            "seed": _take(b, "seed", "tuner", int, 0),
        }
        _reject_unknown(b, "tuner")
        if kwargs["batch"] < 1:
            raise ConfigError("tuner.batch: must be a positive integer")
        if kwargs["coarse_grid"] < 3:
            raise ConfigError("tuner.coarse_grid: must be at least 3")
        if kwargs["refine_tol"] <= 0.0:
            raise ConfigError("tuner.refine_tol: must be positive")
        cfg = replace(cfg, tuner=TunerConfig(**kwargs))

    if "seeds" in doc:
        b = dict(_expect_mapping(doc.pop("seeds"), "seeds"))
        seeds = Seeds(
            sample=_take(b, "sample", "seeds", int, 0),
            data=_take(b, "data", "seeds", int, 1),
            eval=_take(b, "eval", "seeds", int, 2),
        )
        _reject_unknown(b, "seeds")
        cfg = replace(cfg, seeds=seeds)

    if "out_dir" in doc:
        out_dir = doc.pop("out_dir")
        if not isinstance(out_dir, str):
            raise ConfigError(f"out_dir: expected a string, got {out_dir!r}")
        cfg = replace(cfg, out_dir=out_dir)

    _reject_unknown(doc, "config")
    t_eps = cfg.schedule.T * T_EPS_FRACTION
    if cfg.sampler.kind == "dpm-solver-2" and cfg.trajectory.t_min < t_eps:
        raise ConfigError(
            "trajectory.t_min: the two-evaluation sampler needs "
            f"t_min >= t_eps ({t_eps!r} for this schedule)"
        )
    return cfg


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


PRESET_CONFIGS = {
    "gmm8-ddim": ExperimentConfig(),
    "gmm8-dpm2": ExperimentConfig(
        sampler=SamplerBlock(kind="dpm-solver-2"),
        trajectory=TrajectoryBlock(t_min=1000.0 * T_EPS_FRACTION),
    ),
    "standard-ddim": ExperimentConfig(oracle=OracleBlock(preset="standard")),
}
