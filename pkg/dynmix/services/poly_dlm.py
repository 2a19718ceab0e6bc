"""Full conditionals of the reordered p-th order polynomial DLM.

Block k of the state, ``theta_k = (theta_1k, ..., theta_Tk)``, given block
k + 1 is N(mu_k, W_k (H^T H)^{-1}) with
``mu_k = (theta_0k + theta_0(k+1)) 1 + (H^{-1} - I) theta_(k+1)`` and
``mu_p = theta_0p 1``. Gamma distributions are shape-rate throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from dynmix.errors import InvalidDimensionError, InvalidIndexError, SamplerNumericError
from dynmix.models import DlmPriors, PolyDlmState
from dynmix.services.banded_linalg import (
    BandedCholesky,
    BandedSpd,
    apply_BtH,
    apply_H,
    apply_HtB,
    apply_lagged_cumsum,
    build_BtB,
    build_HtH,
    build_identity,
    cholesky,
    sample_gaussian_precision,
)


@dataclass(frozen=True)
class DlmContext:
    """Unit-scale banded matrices shared by every conditional of one fit."""

    T: int
    hth: BandedSpd
    btb: BandedSpd
    identity: BandedSpd

    @classmethod
    def for_length(cls, T: int) -> "DlmContext":
        return cls(T=T, hth=build_HtH(T), btb=build_BtB(T), identity=build_identity(T))


def canonical_system(p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Observation vector F = e_1 and evolution matrix G = J_p(1)."""
    if p < 1:
        raise InvalidDimensionError("p must be >= 1")
    F = np.zeros(p)
    F[0] = 1.0
    G = np.eye(p) + np.eye(p, k=1)
    return F, G


def _check_block(k: int, state: PolyDlmState, lowest: int = 1) -> None:
    if not lowest <= k <= state.p:
        raise InvalidIndexError(f"block index {k} outside {lowest}..{state.p}")


def prior_mean_vector(k: int, state: PolyDlmState) -> np.ndarray:
    _check_block(k, state)
    if k == state.p:
        return np.full(state.T, state.initial_value(k))
    offset = state.initial_value(k) + state.initial_value(k + 1)
    return offset + apply_lagged_cumsum(state.block(k + 1))


def theta_block_system(k: int, state: PolyDlmState, context: DlmContext) -> Tuple[BandedSpd, np.ndarray]:
    """Posterior precision and un-normalized mean of block k >= 2."""
    _check_block(k, state, lowest=2)
    w_k = state.W[k - 1]
    w_prev = state.W[k - 2]
    precision = context.hth.scaled(1.0 / w_k) + context.btb.scaled(1.0 / w_prev)
    b_vec = apply_BtH(state.block(k - 1)) / w_prev
    b_vec[0] += (state.initial_value(k) + state.initial_value(k + 1)) / w_k
    if k < state.p:
        b_vec += apply_HtB(state.block(k + 1)) / w_k
    return precision, b_vec


def first_block_system(
    state: PolyDlmState,
    obs: Sequence[float],
    obs_precision: float,
    context: DlmContext,
) -> Tuple[BandedSpd, np.ndarray]:
    """Posterior precision and un-normalized mean of block 1 under Gaussian observations.

    ``obs`` enters with precision ``obs_precision`` (1/V for the identity link,
    1 for the probit latent variables).
    """
    y = np.asarray(obs, dtype=float)
    if y.shape != (state.T,):
        raise InvalidDimensionError(f"observations must have length {state.T}")
    w_1 = state.W[0]
    precision = context.identity.scaled(obs_precision) + context.hth.scaled(1.0 / w_1)
    b_vec = obs_precision * y
    b_vec[0] += (state.initial_value(1) + state.initial_value(2)) / w_1
    if state.p > 1:
        b_vec += apply_HtB(state.block(2)) / w_1
    return precision, b_vec


def _draw(
    rng: np.random.Generator,
    precision: BandedSpd,
    b_vec: np.ndarray,
    noise: Optional[Sequence[float]],
) -> np.ndarray:
    factor: BandedCholesky = cholesky(precision)
    return sample_gaussian_precision(rng, factor, b_vec, noise)


def sample_theta_block(
    rng: np.random.Generator,
    k: int,
    state: PolyDlmState,
    context: DlmContext,
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    precision, b_vec = theta_block_system(k, state, context)
    state.theta[k - 1] = _draw(rng, precision, b_vec, noise)
    return state.theta[k - 1]


def sample_first_block(
    rng: np.random.Generator,
    state: PolyDlmState,
    obs: Sequence[float],
    obs_precision: float,
    context: DlmContext,
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    precision, b_vec = first_block_system(state, obs, obs_precision, context)
    state.theta[0] = _draw(rng, precision, b_vec, noise)
    return state.theta[0]


def sample_theta_block_gaussian(
    rng: np.random.Generator,
    state: PolyDlmState,
    y: Sequence[float],
    context: DlmContext,
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    return sample_first_block(rng, state, y, 1.0 / state.V, context, noise)


def theta0_posterior(k: int, state: PolyDlmState, priors: DlmPriors) -> Tuple[float, float]:
    """Mean and variance of theta_0k given the first-time states."""
    _check_block(k, state)
    precision = 1.0 / priors.theta0_var[k - 1]
    weighted = priors.theta0_mean[k - 1] * precision
    # theta_1k = theta_0k + theta_0(k+1) + noise
    w_k = state.W[k - 1]
    precision += 1.0 / w_k
    weighted += (state.block(k)[0] - state.initial_value(k + 1)) / w_k
    if k > 1:
        # theta_1(k-1) = theta_0(k-1) + theta_0k + noise
        w_prev = state.W[k - 2]
        precision += 1.0 / w_prev
        weighted += (state.block(k - 1)[0] - state.initial_value(k - 1)) / w_prev
    variance = 1.0 / precision
    return variance * weighted, variance


def sample_theta0(rng: np.random.Generator, k: int, state: PolyDlmState, priors: DlmPriors) -> float:
    mean, variance = theta0_posterior(k, state, priors)
    state.theta0[k - 1] = rng.normal(mean, np.sqrt(variance))
    return float(state.theta0[k - 1])


def w_posterior(k: int, state: PolyDlmState, priors: DlmPriors) -> Tuple[float, float]:
    """Shape and rate of the gamma full conditional of 1/W_k."""
    residual = apply_H(state.block(k) - prior_mean_vector(k, state))
    quadratic = float(residual @ residual)
    if not np.isfinite(quadratic):
        raise SamplerNumericError(f"non-finite evolution residual in block {k}")
    return priors.w_shape[k - 1] + state.T / 2.0, priors.w_rate[k - 1] + 0.5 * quadratic


def sample_W(rng: np.random.Generator, k: int, state: PolyDlmState, priors: DlmPriors) -> float:
    shape, rate = w_posterior(k, state, priors)
    state.W[k - 1] = 1.0 / rng.gamma(shape, 1.0 / rate)
    return float(state.W[k - 1])


def v_posterior(state: PolyDlmState, priors: DlmPriors, y: Sequence[float]) -> Tuple[float, float]:
    """Shape and rate of the gamma full conditional of 1/V."""
    residual = np.asarray(y, dtype=float) - state.block(1)
    quadratic = float(residual @ residual)
    if not np.isfinite(quadratic):
        raise SamplerNumericError("non-finite observation residual")
    return priors.v_shape + state.T / 2.0, priors.v_rate + 0.5 * quadratic


def sample_V(rng: np.random.Generator, state: PolyDlmState, priors: DlmPriors, y: Sequence[float]) -> float:
    shape, rate = v_posterior(state, priors, y)
    state.V = 1.0 / rng.gamma(shape, 1.0 / rate)
    return state.V


def stack_states(theta: np.ndarray) -> np.ndarray:
    """Reordered blocks (p, T) to the time-major stacked states (T, p)."""
    blocks = np.asarray(theta, dtype=float)
    if blocks.ndim != 2:
        raise InvalidDimensionError("reordered states must be a (p, T) array")
    return blocks.T.copy()


def reorder_states(stacked: np.ndarray) -> np.ndarray:
    """Time-major stacked states (T, p) to reordered blocks (p, T)."""
    rows = np.asarray(stacked, dtype=float)
    if rows.ndim != 2:
        raise InvalidDimensionError("stacked states must be a (T, p) array")
    return rows.T.copy()


def simulate_prior(
    rng: np.random.Generator,
    p: int,
    T: int,
    priors: DlmPriors,
) -> Tuple[PolyDlmState, np.ndarray]:
    """Forward-simulate hyperparameters, states and Gaussian observations.

    States follow the stacked recursion theta_t = G theta_(t-1) + omega_t
    with G = J_p(1), starting from theta_0.
    """
    F, G = canonical_system(p)
    theta0 = rng.normal(priors.theta0_mean, np.sqrt(priors.theta0_var))
    W = 1.0 / rng.gamma(priors.w_shape, 1.0 / priors.w_rate)
    V = 1.0 / rng.gamma(priors.v_shape, 1.0 / priors.v_rate)
    stacked = np.empty((T, p))
    previous = theta0
    for t in range(T):
        previous = G @ previous + rng.normal(0.0, np.sqrt(W))
        stacked[t] = previous
    y = stacked @ F + rng.normal(0.0, np.sqrt(V), size=T)
    return PolyDlmState(theta=reorder_states(stacked), theta0=theta0, W=W, V=V), y
