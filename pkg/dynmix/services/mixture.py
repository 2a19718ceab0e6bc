"""Conditionals of the two-component Gaussian mixture.

``z_t = 1`` places observation t in component 2 (index 1 of the parameter
arrays). Precisions are drawn from shape-rate gamma distributions.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from dynmix.errors import InvalidDimensionError
from dynmix.models import MixtureParams, MixturePriors

N_COMPONENTS = 2


def _as_series(y: Sequence[float], T: int) -> np.ndarray:
    values = np.asarray(y, dtype=float)
    if values.shape != (T,):
        raise InvalidDimensionError(f"observations must have length {T}, got shape {values.shape}")
    return values


def sufficient_statistics(y: Sequence[float], z: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Per-component counts T_k and sums s_k."""
    z = np.asarray(z)
    values = _as_series(y, z.size)
    counts = np.bincount(z, minlength=N_COMPONENTS).astype(float)
    sums = np.bincount(z, weights=values, minlength=N_COMPONENTS)
    return counts, sums


def mean_posterior(k: int, params: MixtureParams, priors: MixturePriors, y: Sequence[float]) -> Tuple[float, float]:
    """Normal full conditional of mu_k given phi_k and the allocations: (mean, variance)."""
    counts, sums = sufficient_statistics(y, params.z)
    prior_precision = 1.0 / priors.mu_var[k]
    variance = 1.0 / (counts[k] * params.phi[k] + prior_precision)
    mean = variance * (sums[k] * params.phi[k] + priors.mu_mean[k] * prior_precision)
    return float(mean), float(variance)


def precision_posterior(k: int, params: MixtureParams, priors: MixturePriors, y: Sequence[float]) -> Tuple[float, float]:
    """Gamma full conditional of phi_k given mu_k and the allocations: (shape, rate)."""
    values = _as_series(y, params.z.size)
    member = values[params.z == k]
    spread = float(np.sum((member - params.mu[k]) ** 2))
    return priors.phi_shape[k] + member.size / 2.0, priors.phi_rate[k] + spread / 2.0


def sample_components(
    rng: np.random.Generator,
    params: MixtureParams,
    priors: MixturePriors,
    y: Sequence[float],
) -> MixtureParams:
    for k in range(N_COMPONENTS):
        mean, variance = mean_posterior(k, params, priors, y)
        params.mu[k] = rng.normal(mean, np.sqrt(variance))
        shape, rate = precision_posterior(k, params, priors, y)
        params.phi[k] = rng.gamma(shape, 1.0 / rate)
    return enforce_order(params)


def enforce_order(params: MixtureParams) -> MixtureParams:
    """Relabel so that mu_1 < mu_2; allocations follow their components."""
    if params.mu[0] > params.mu[1]:
        params.mu = params.mu[::-1].copy()
        params.phi = params.phi[::-1].copy()
        params.z = (1 - params.z).astype(np.int8)
    return params


def allocation_probabilities(params: MixtureParams, alpha: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """P(z_t = 1 | y_t, alpha_t, mu, phi), computed from log-odds."""
    weights = np.asarray(alpha, dtype=float)
    values = _as_series(y, weights.size)
    scale = 1.0 / np.sqrt(params.phi)
    with np.errstate(divide="ignore"):
        log_first = np.log1p(-weights) + norm.logpdf(values, params.mu[0], scale[0])
        log_second = np.log(weights) + norm.logpdf(values, params.mu[1], scale[1])
    return expit(log_second - log_first)


def sample_allocations(
    rng: np.random.Generator,
    params: MixtureParams,
    alpha: Sequence[float],
    y: Sequence[float],
) -> np.ndarray:
    probabilities = allocation_probabilities(params, alpha, y)
    params.z = (rng.random(probabilities.size) < probabilities).astype(np.int8)
    return params.z


def complete_loglik(params: MixtureParams, y: Sequence[float]) -> float:
    """Log-density of y given the allocations and component parameters."""
    values = _as_series(y, params.z.size)
    labels = params.z.astype(int)
    return float(np.sum(norm.logpdf(values, params.mu[labels], 1.0 / np.sqrt(params.phi[labels]))))


def initial_params(y: Sequence[float], priors: MixturePriors) -> MixtureParams:
    """Median split of the data, with group means and inverse group variances.

    An empty group starts at its prior mean; a group with fewer than two
    distinct values starts with unit precision.
    """
    values = np.asarray(y, dtype=float)
    z = (values > np.median(values)).astype(np.int8)
    mu = np.array(priors.mu_mean, dtype=float)
    phi = np.ones(N_COMPONENTS)
    for k in range(N_COMPONENTS):
        member = values[z == k]
        if member.size:
            mu[k] = member.mean()
        if member.size > 1 and member.var(ddof=1) > 0:
            phi[k] = 1.0 / member.var(ddof=1)
    return enforce_order(MixtureParams(mu=mu, phi=phi, z=z))
