"""Variance-preserving noise schedule and its log-SNR reparameterization.

The schedule assigns to every continuous time t in [0, T] a pair
(alpha_t, sigma_t) with alpha_t^2 + sigma_t^2 = 1, where alpha_t is the
surviving signal fraction of the forward noising process and sigma_t the
accumulated noise scale:

    alpha_t = exp(-1/2 * int_0^t beta(s) ds),  sigma_t = sqrt(1 - alpha_t^2),
    beta(s) = beta_min + (beta_max - beta_min) * s / T.

The integral of the linear rate has a closed form, so no quadrature is
needed. The log signal-to-noise ratio lambda(t) = log(alpha_t / sigma_t)
is strictly decreasing on (0, T] and inverted by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Smallest time used when a positive evaluation time is required
# (lambda grids, loss conditioning at the final step), as a fraction of T.
T_EPS_FRACTION = 1e-3
# Lower end of the bisection domain for inverting lambda, as a fraction of T.
T_MIN_EFF_FRACTION = 1e-6


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear variance-preserving schedule over t in [0, T].

    beta_min and beta_max are rates per unit time; with the defaults and
    T = 1000 each unit of t corresponds to one step of the conventional
    1000-step discrete schedule.
    """

    beta_min: float = 1e-4
    beta_max: float = 0.02
    T: float = 1000.0
    kind: str = "linear-vp"

    def __post_init__(self) -> None:
        if self.kind != "linear-vp":
            raise DomainError(f"unknown schedule kind: {self.kind!r}")
        if not (0 < self.beta_min <= self.beta_max):
            raise DomainError("schedule requires 0 < beta_min <= beta_max")
        if not (self.T > 0):
            raise DomainError("schedule horizon T must be positive")

    @property
    def t_eps(self) -> float:
        return T_EPS_FRACTION * self.T

    def _log_alpha(self, t):
        # closed form of -1/2 int_0^t beta(s) ds for the linear rate
        return -0.5 * (
            self.beta_min * t + (self.beta_max - self.beta_min) * t * t / (2.0 * self.T)
        )

    def _check_t(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.T):
            raise DomainError(f"t must lie in [0, {self.T}], got {t}")
        return t

    def alpha_sigma(self, t):
        """(alpha_t, sigma_t) for scalar or array t in [0, T]."""
        t = self._check_t(t)
        la = self._log_alpha(t)
        alpha = np.exp(la)
        # 1 - alpha^2 via expm1 keeps sigma accurate near t = 0
        sigma = np.sqrt(-np.expm1(2.0 * la))
        if np.isscalar(t) or t.ndim == 0:
            return float(alpha), float(sigma)
        return alpha, sigma

    def log_snr(self, t):
        """lambda(t) = log(alpha_t / sigma_t); requires t > 0."""
        t = self._check_t(t)
        if np.any(t <= 0):
            raise DomainError("log_snr is infinite at t = 0")
        la = self._log_alpha(t)
        lam = la - 0.5 * np.log(-np.expm1(2.0 * la))
        if np.isscalar(t) or t.ndim == 0:
            return float(lam)
        return lam

    def t_from_log_snr(self, lam: float) -> float:
        """Unique t in [t_min_eff, T] with log_snr(t) = lam, by bisection."""
        t_lo = T_MIN_EFF_FRACTION * self.T
        lam_hi = self.log_snr(t_lo)  # largest lambda on the domain
        lam_lo = self.log_snr(self.T)
        if not (lam_lo <= lam <= lam_hi):
            raise DomainError(
                f"lambda {lam} outside invertible range [{lam_lo}, {lam_hi}]"
            )
        lo, hi = t_lo, self.T
        tol = 1e-12 * self.T
        # log_snr decreases in t: keep lam between log_snr(hi) and log_snr(lo)
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.log_snr(mid) >= lam:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def forward_sample(self, x0: np.ndarray, t: float, eps: np.ndarray) -> np.ndarray:
        """x_t = alpha_t * x0 + sigma_t * eps for caller-supplied noise."""
        x0 = np.asarray(x0, dtype=float)
        eps = np.asarray(eps, dtype=float)
        if x0.shape != eps.shape:
            raise DomainError(
                f"x0 shape {x0.shape} does not match eps shape {eps.shape}"
            )
        alpha, sigma = self.alpha_sigma(t)
        return alpha * x0 + sigma * eps
