"""Samplers for the first state block when observations are not Gaussian.

Two routes are provided: a component-wise random-walk Metropolis-Hastings
sweep that works with any bijective link, and probit data augmentation for
binary responses. Time indices in the public helpers are 1-based.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, logit, ndtr, ndtri, xlog1py, xlogy

from dynmix.errors import ConfigurationError, InvalidDimensionError, InvalidIndexError
from dynmix.models import PolyDlmState
from dynmix.services.poly_dlm import DlmContext, sample_first_block

logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
BATCH_SIZE = 50
TARGET_ACCEPTANCE = 0.44
TAIL_CUTOFF = 5.0

LogLikelihood = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _identity(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _clamp(values: np.ndarray) -> np.ndarray:
    return np.clip(values, PROBABILITY_FLOOR, 1.0 - PROBABILITY_FLOOR)


@dataclass(frozen=True)
class Link:
    """A continuous bijection between the weight space and the real line."""

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    _inverse: Callable[[np.ndarray], np.ndarray]
    bounded: bool = True

    def inverse(self, x: Sequence[float]) -> np.ndarray:
        """Map states back to weights; bounded links never return exactly 0 or 1."""
        values = self._inverse(np.asarray(x, dtype=float))
        return _clamp(values) if self.bounded else values


LINKS: Dict[str, Link] = {
    "logit": Link("logit", logit, expit),
    "probit": Link("probit", ndtri, ndtr),
    "identity": Link("identity", _identity, _identity, bounded=False),
}


def get_link(name: str) -> Link:
    try:
        return LINKS[name]
    except KeyError:
        raise ConfigurationError(f"unknown link '{name}'") from None


def bernoulli_loglik(y: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return binomial_loglik(1)(y, alpha)


def binomial_loglik(trials: int) -> LogLikelihood:
    """Per-observation binomial log-likelihood kernel (binomial coefficient dropped)."""
    if trials < 1:
        raise ConfigurationError("number of trials must be >= 1")

    def loglik(y: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        return xlogy(y, alpha) + xlog1py(trials - y, -alpha)

    return loglik


@dataclass
class AdaptiveScales:
    """Per-site random-walk scales with batch acceptance bookkeeping.

    ``batch`` is the 1-based index of the batch being filled.
    """

    log_scale: np.ndarray
    batch_accepted: np.ndarray
    batch_iterations: int = 0
    batch: int = 1
    total_accepted: Optional[np.ndarray] = None
    total_iterations: int = 0
    nonfinite: int = 0
    batch_size: int = BATCH_SIZE
    target: float = TARGET_ACCEPTANCE

    def __post_init__(self) -> None:
        self.log_scale = np.asarray(self.log_scale, dtype=float)
        self.batch_accepted = np.asarray(self.batch_accepted, dtype=np.int64)
        if self.total_accepted is None:
            self.total_accepted = np.zeros(self.log_scale.size, dtype=np.int64)
        if self.batch_accepted.shape != self.log_scale.shape:
            raise InvalidDimensionError("acceptance counters must match the number of sites")

    @classmethod
    def for_length(cls, T: int, initial_scale: float = 1.0) -> "AdaptiveScales":
        if T < 1:
            raise InvalidDimensionError("T must be >= 1")
        return cls(
            log_scale=np.full(T, math.log(initial_scale)),
            batch_accepted=np.zeros(T, dtype=np.int64),
        )

    @property
    def scale(self) -> np.ndarray:
        return np.exp(self.log_scale)

    @property
    def T(self) -> int:
        return self.log_scale.size

    def record(self, accepted: np.ndarray) -> None:
        """Count one sweep; the scales adapt when a batch is complete."""
        accepted = np.asarray(accepted, dtype=bool)
        self.batch_accepted += accepted
        self.total_accepted += accepted
        self.batch_iterations += 1
        self.total_iterations += 1
        if self.batch_iterations >= self.batch_size:
            adapt_scales(self)

    def acceptance_rates(self) -> np.ndarray:
        if self.total_iterations == 0:
            return np.zeros(self.T)
        return self.total_accepted / self.total_iterations


def adapt_scales(scales: AdaptiveScales) -> AdaptiveScales:
    """Nudge every log-scale towards the target acceptance rate and start a new batch."""
    step = min(0.01, scales.batch ** -0.5)
    fraction = scales.batch_accepted / max(scales.batch_iterations, 1)
    scales.log_scale = np.where(fraction > scales.target, scales.log_scale + step, scales.log_scale - step)
    scales.batch_accepted[:] = 0
    scales.batch_iterations = 0
    scales.batch += 1
    return scales


def _moments(
    i: int,
    theta1: Sequence[float],
    theta2: Sequence[float],
    start: float,
    w1: float,
) -> Tuple[float, float]:
    previous = start if i == 0 else theta1[i - 1] + theta2[i - 1]
    if i == len(theta1) - 1:
        return previous, w1
    return 0.5 * ((theta1[i + 1] - theta2[i]) + previous), 0.5 * w1


def cwmh_conditional(t: int, state: PolyDlmState) -> Tuple[float, float]:
    """Prior mean and variance of theta_t1 given the rest of block 1 and block 2."""
    if not 1 <= t <= state.T:
        raise InvalidIndexError(f"time index {t} outside 1..{state.T}")
    start = state.initial_value(1) + state.initial_value(2)
    mean, variance = _moments(t - 1, state.block(1), state.next_block(1), start, float(state.W[0]))
    return float(mean), float(variance)


def log_acceptance_ratio(
    current: float,
    candidate: float,
    prior_mean: float,
    prior_var: float,
    loglik_delta: float,
) -> float:
    return ((current - prior_mean) ** 2 - (candidate - prior_mean) ** 2) / (2.0 * prior_var) + loglik_delta


def cwmh_sweep(
    rng: np.random.Generator,
    state: PolyDlmState,
    obs: Sequence[float],
    link: Link,
    scales: AdaptiveScales,
    loglik: LogLikelihood,
) -> np.ndarray:
    """One left-to-right Metropolis-Hastings pass over theta_11, ..., theta_T1.

    Returns the per-site acceptance indicators of this sweep.
    """
    y = np.asarray(obs, dtype=float)
    if y.shape != (state.T,) or scales.T != state.T:
        raise InvalidDimensionError(f"observations and scales must have length {state.T}")
    current = state.block(1)
    candidates = current + scales.scale * rng.standard_normal(state.T)
    log_u = np.log1p(-rng.random(state.T))
    # Site t only changes when visited, so the likelihood terms can be evaluated up front.
    with np.errstate(invalid="ignore", over="ignore"):
        deltas = loglik(y, link.inverse(candidates)) - loglik(y, link.inverse(current))

    theta1 = current.tolist()
    theta2 = state.next_block(1).tolist()
    start = state.initial_value(1) + state.initial_value(2)
    w1 = float(state.W[0])
    accepted = np.zeros(state.T, dtype=bool)
    nonfinite = 0
    for i, (candidate, delta, threshold) in enumerate(zip(candidates.tolist(), deltas.tolist(), log_u.tolist())):
        mean, variance = _moments(i, theta1, theta2, start, w1)
        ratio = log_acceptance_ratio(theta1[i], candidate, mean, variance, delta)
        if not math.isfinite(ratio):
            nonfinite += 1
            continue
        if threshold < ratio:
            theta1[i] = candidate
            accepted[i] = True

    state.theta[0] = theta1
    if nonfinite:
        scales.nonfinite += nonfinite
        logger.debug("rejected %d proposals with non-finite acceptance ratio", nonfinite)
    scales.record(accepted)
    return accepted


def _exponential_tail(rng: np.random.Generator, lower: np.ndarray) -> np.ndarray:
    # Robert's translated-exponential rejection sampler for N(0, 1) on (lower, inf).
    rate = 0.5 * (lower + np.sqrt(lower * lower + 4.0))
    out = np.empty_like(lower)
    pending = np.arange(lower.size)
    while pending.size:
        a = lower[pending]
        lam = rate[pending]
        proposal = a + rng.standard_exponential(pending.size) / lam
        keep = np.log(rng.random(pending.size)) <= -0.5 * (proposal - lam) ** 2
        out[pending[keep]] = proposal[keep]
        pending = pending[~keep]
    return out


def sample_positive_normal(rng: np.random.Generator, mean: Sequence[float]) -> np.ndarray:
    """Independent draws from N(mean_t, 1) truncated to (0, inf)."""
    mean = np.asarray(mean, dtype=float)
    out = np.empty_like(mean)
    lower = -mean
    body = lower <= TAIL_CUTOFF
    if np.any(body):
        u = 1.0 - rng.random(int(body.sum()))
        m = mean[body]
        out[body] = m - ndtri(u * ndtr(m))
    if not np.all(body):
        out[~body] = mean[~body] + _exponential_tail(rng, lower[~body])
    return np.maximum(out, np.finfo(float).tiny)


def probit_augment(rng: np.random.Generator, state: PolyDlmState, z: Sequence[int]) -> np.ndarray:
    """Latent v_t ~ N(theta_t1, 1), positive when z_t = 1 and negative when z_t = 0."""
    responses = np.asarray(z)
    if responses.shape != (state.T,):
        raise InvalidDimensionError(f"responses must have length {state.T}")
    if not np.all((responses == 0) | (responses == 1)):
        raise InvalidDimensionError("probit augmentation requires binary responses")
    sign = 2.0 * responses - 1.0
    return sign * sample_positive_normal(rng, sign * state.block(1))


def probit_theta1(
    rng: np.random.Generator,
    state: PolyDlmState,
    v: Sequence[float],
    context: DlmContext,
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    return sample_first_block(rng, state, v, 1.0, context, noise)
