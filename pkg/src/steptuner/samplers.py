"""Few-step reverse-process solvers.

Two families are provided. The eta-family covers the deterministic
first-order solver (eta = 0) through the fully stochastic ancestral one
(eta = 1) with a single step function. The two-evaluation log-SNR midpoint
solver gives a second-order alternative. Every step accepts conditioning
times that may differ from the trajectory times: the solver coefficients
always come from the trajectory endpoints, only the time fed to the
noise-prediction model is replaced.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, sqrt
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError
from .oracle import GaussianMixtureOracle
from .rng import PURPOSE_PATHS, derive_rng
from .trajectory import TunedTrajectory, midpoint_time

SAMPLER_KINDS = ("ddim-family", "dpm-solver-2")


@dataclass(frozen=True)
class SamplerConfig:
    kind: str = "ddim-family"
    eta: float = 0.0
    seed: int = 0  # noise seed, used only when eta > 0

    def __post_init__(self) -> None:
        if self.kind not in SAMPLER_KINDS:
            raise DomainError(f"unknown sampler kind: {self.kind!r}")
        if not (0.0 <= self.eta <= 1.0):
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")

    @property
    def deterministic(self) -> bool:
        return self.kind == "dpm-solver-2" or self.eta == 0.0


@dataclass(frozen=True)
class SamplePath:
    """States recorded along one rollout, ordered from t_K down to t_0."""

    states: np.ndarray  # (K+1, n, D); states[0] is the supplied x_T
    trajectory_points: np.ndarray
    seed: Optional[int] = None

    def state_at(self, i: int) -> np.ndarray:
        """State at trajectory index i (i = K is the start)."""
        K = len(self.trajectory_points) - 1
        return self.states[K - i]


def _check_interval(t_from: float, t_to: float) -> None:
    if not (t_to < t_from):
        raise DomainError(f"step requires t_to < t_from, got {t_to} >= {t_from}")


def _deterministic_part(x, a_from, s_from, a_to, s_to_eff, eps_hat):
    # Single shared expression so every caller produces bit-identical
    # arithmetic; do not reassociate.
    return (a_to / a_from) * x - (a_to * s_from / a_from - s_to_eff) * eps_hat


def _eta_noise_scale(eta: float, a_from, s_from, a_to, s_to) -> float:
    # Standard eta-interpolation between the deterministic and ancestral
    # updates; at eta = 1 this is the ancestral posterior noise scale.
    return eta * (s_to / s_from) * sqrt(max(0.0, 1.0 - (a_from * a_from) / (a_to * a_to)))


def ddim_step(
    x: np.ndarray,
    t_from: float,
    t_to: float,
    tau: float,
    model: GaussianMixtureOracle,
    eta: float = 0.0,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """One eta-family step from t_from to t_to, conditioning the model at tau."""
    _check_interval(t_from, t_to)
    sched = model.schedule
    if not (0.0 < tau <= sched.T):
        raise DomainError(f"conditioning time must lie in (0, T], got {tau}")
    if eta > 0.0 and noise is None:
        raise ContractError("eta > 0 requires a noise array")
    a_from, s_from = sched.alpha_sigma(t_from)
    a_to, s_to = sched.alpha_sigma(t_to)
    eps_hat = model.epsilon(x, tau)
    if eta == 0.0:
        return _deterministic_part(x, a_from, s_from, a_to, s_to, eps_hat)
    sig_eta = _eta_noise_scale(eta, a_from, s_from, a_to, s_to)
    s_to_eff = sqrt(max(0.0, s_to * s_to - sig_eta * sig_eta))
    return _deterministic_part(x, a_from, s_from, a_to, s_to_eff, eps_hat) + sig_eta * noise


def ddim_step_baseline(
    x: np.ndarray,
    t_from: float,
    t_to: float,
    model: GaussianMixtureOracle,
    eta: float = 0.0,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """The plain solver step: conditioning time equal to the source time."""
    _check_interval(t_from, t_to)
    sched = model.schedule
    if eta > 0.0 and noise is None:
        raise ContractError("eta > 0 requires a noise array")
    a_from, s_from = sched.alpha_sigma(t_from)
    a_to, s_to = sched.alpha_sigma(t_to)
    eps_hat = model.epsilon(x, t_from)
    if eta == 0.0:
        return _deterministic_part(x, a_from, s_from, a_to, s_to, eps_hat)
    sig_eta = _eta_noise_scale(eta, a_from, s_from, a_to, s_to)
    s_to_eff = sqrt(max(0.0, s_to * s_to - sig_eta * sig_eta))
    return _deterministic_part(x, a_from, s_from, a_to, s_to_eff, eps_hat) + sig_eta * noise


def dpm_solver2_step(
    x: np.ndarray,
    t_from: float,
    t_to: float,
    tau_a: float,
    tau_b: float,
    model: GaussianMixtureOracle,
) -> np.ndarray:
    """One log-SNR midpoint step with two model evaluations.

    Baseline conditioning is tau_a = t_from and tau_b = the midpoint time;
    tuning replaces only those two arguments, never the coefficients.
    """
    _check_interval(t_from, t_to)
    sched = model.schedule
    if t_to < sched.t_eps:
        raise DomainError(
            f"two-evaluation step needs t_to >= {sched.t_eps} for log-SNR, got {t_to}"
        )
    for tau in (tau_a, tau_b):
        if not (0.0 < tau <= sched.T):
            raise DomainError(f"conditioning time must lie in (0, T], got {tau}")
    lam_from = sched.log_snr(t_from)
    lam_to = sched.log_snr(t_to)
    h = lam_to - lam_from
    s_mid = sched.t_from_log_snr(lam_from + 0.5 * h)
    a_from, _ = sched.alpha_sigma(t_from)
    a_s, s_s = sched.alpha_sigma(s_mid)
    a_to, s_to = sched.alpha_sigma(t_to)
    u = (a_s / a_from) * x - s_s * (exp(0.5 * h) - 1.0) * model.epsilon(x, tau_a)
    return (a_to / a_from) * x - s_to * (exp(h) - 1.0) * model.epsilon(u, tau_b)


def sample_path(
    x_T: np.ndarray,
    tuned: TunedTrajectory,
    sampler: SamplerConfig,
    model: GaussianMixtureOracle,
    path_offset: int = 0,
) -> SamplePath:
    """Roll a batch of states from t_K down to t_0, recording every stop.

    For stochastic sampling each injected noise row is seeded by
    (sampler seed, global path index, step), so splitting a batch across
    workers at any offset reproduces the single-worker output exactly.
    """
    if tuned.sampler_kind != sampler.kind:
        raise ContractError(
            f"tuned trajectory is for {tuned.sampler_kind!r}, sampler is "
            f"{sampler.kind!r}"
        )
    x = np.atleast_2d(np.asarray(x_T, dtype=float))
    if not np.all(np.isfinite(x)):
        raise DomainError("x_T must be finite")
    pts = tuned.base.points
    K = tuned.base.K
    states = np.empty((K + 1,) + x.shape)
    states[0] = x
    for i in range(K, 0, -1):
        t_from, t_to = pts[i], pts[i - 1]
        taus = tuned.taus_for_step(i)
        if sampler.kind == "ddim-family":
            noise = None
            if sampler.eta > 0.0:
                noise = np.empty_like(x)
                for row in range(x.shape[0]):
                    rng = derive_rng(sampler.seed, PURPOSE_PATHS, path_offset + row, i)
                    noise[row] = rng.standard_normal(x.shape[1])
            x = ddim_step(x, t_from, t_to, taus[0], model, sampler.eta, noise)
        else:
            x = dpm_solver2_step(x, t_from, t_to, taus[0], taus[1], model)
        states[K - i + 1] = x
    return SamplePath(states=states, trajectory_points=pts, seed=sampler.seed)


__all__ = [
    "SamplerConfig",
    "SamplePath",
    "ddim_step",
    "ddim_step_baseline",
    "dpm_solver2_step",
    "sample_path",
    "midpoint_time",
]
