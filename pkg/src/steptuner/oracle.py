"""Analytic noise-prediction oracle for Gaussian-mixture data.

For data drawn from a mixture of isotropic Gaussians, the noised marginal
at time t is itself a mixture,

    q_t(x) = sum_k w_k N(x; alpha_t mu_k, (alpha_t^2 c_k^2 + sigma_t^2) I),

so the score and the ideal noise prediction have closed forms. The oracle
plays the role a trained network would play, but exactly: epsilon(x, t) is
the true posterior mean of the noise given x_t = x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .rng import PURPOSE_DATA, per_sample_map
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class GaussianMixtureOracle:
    schedule: NoiseSchedule
    means: np.ndarray  # (n_components, D)
    scales: np.ndarray  # (n_components,), isotropic per component, > 0
    weights: np.ndarray  # (n_components,), sums to 1

    def __post_init__(self) -> None:
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        scales = np.asarray(self.scales, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "weights", weights)
        k = means.shape[0]
        if scales.shape != (k,) or weights.shape != (k,):
            raise DomainError("means, scales and weights disagree on component count")
        if np.any(scales <= 0):
            raise DomainError("all component scales must be positive")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be positive and sum to 1")

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _log_weighted_densities(self, x: np.ndarray, t: float) -> np.ndarray:
        """(n, k) array of log(w_k N(x; alpha mu_k, v_k I)) and v_k."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise DomainError("oracle evaluated at non-finite point")
        alpha, sigma = self.schedule.alpha_sigma(t)
        v = alpha * alpha * self.scales**2 + sigma * sigma  # (k,)
        diff = x[:, None, :] - alpha * self.means[None, :, :]  # (n, k, D)
        logn = (
            -0.5 * np.sum(diff * diff, axis=2) / v[None, :]
            - 0.5 * self.dim * np.log(2.0 * np.pi * v)[None, :]
            + np.log(self.weights)[None, :]
        )
        return logn, v, diff

    def responsibilities(self, x: np.ndarray, t: float) -> np.ndarray:
        """(n, k) posterior component probabilities, stable in log space."""
        logn, _, _ = self._log_weighted_densities(x, t)
        m = logn.max(axis=1, keepdims=True)
        g = np.exp(logn - m)
        return g / g.sum(axis=1, keepdims=True)

    def log_density(self, x: np.ndarray, t: float) -> np.ndarray:
        """log q_t(x) via log-sum-exp over components."""
        squeeze = np.asarray(x).ndim == 1
        logn, _, _ = self._log_weighted_densities(x, t)
        m = logn.max(axis=1, keepdims=True)
        out = (m + np.log(np.exp(logn - m).sum(axis=1, keepdims=True)))[:, 0]
        return float(out[0]) if squeeze else out

    def score(self, x: np.ndarray, t: float) -> np.ndarray:
        """Gradient of log q_t at x: responsibility-weighted Gaussian pulls."""
        squeeze = np.asarray(x).ndim == 1
        logn, v, diff = self._log_weighted_densities(x, t)
        m = logn.max(axis=1, keepdims=True)
        g = np.exp(logn - m)
        g /= g.sum(axis=1, keepdims=True)
        out = np.einsum("nk,nkd->nd", g / v[None, :], -diff)
        return out[0] if squeeze else out

    def epsilon(self, x: np.ndarray, t: float) -> np.ndarray:
        """Ideal noise prediction: -sigma_t times the score at (x, t)."""
        _, sigma = self.schedule.alpha_sigma(t)
        return -sigma * self.score(x, t)

    def sample_data(self, n: int, seed: int, workers: int = 1) -> np.ndarray:
        """n clean data points; per-sample seeds make any worker split agree."""
        if n < 0:
            raise DomainError(f"sample count must be >= 0, got {n}")
        out = np.empty((n, self.dim))
        k = len(self.weights)

        def fill(rng: np.random.Generator, j: int) -> None:
            comp = rng.choice(k, p=self.weights)
            out[j] = self.means[comp] + self.scales[comp] * rng.standard_normal(self.dim)

        per_sample_map(fill, n, (seed, PURPOSE_DATA), workers)
        return out


def gmm8(schedule: NoiseSchedule) -> GaussianMixtureOracle:
    """Benchmark mixture: 8 equal modes on the unit circle, scale 0.05."""
    angles = 2.0 * np.pi * np.arange(8) / 8
    means = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return GaussianMixtureOracle(
        schedule=schedule,
        means=means,
        scales=np.full(8, 0.05),
        weights=np.full(8, 1.0 / 8.0),
    )


def standard_gaussian(schedule: NoiseSchedule, dim: int = 2) -> GaussianMixtureOracle:
    """Single standard-normal component; every solver map becomes linear."""
    return GaussianMixtureOracle(
        schedule=schedule,
        means=np.zeros((1, dim)),
        scales=np.ones(1),
        weights=np.ones(1),
    )


ORACLE_PRESETS = {"gmm8": gmm8, "standard": standard_gaussian}
