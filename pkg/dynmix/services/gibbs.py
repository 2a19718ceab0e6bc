"""Gibbs sampler for dynamic-weight mixtures and the single-series DLM fits.

Per iteration, in order:

1. component means and precisions, then relabelling (mixture data only);
2. allocations z_t (mixture data only);
3. for k = p, ..., 2: theta_0k, W_k and block k;
4. theta_01;
5. W_1;
6. block 1, through the Metropolis-Hastings sweep, probit augmentation or the
   Gaussian conditional, depending on the data and link;
7. alpha_t = inverse link of theta_t1.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import replace
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from dynmix.errors import ConfigurationError, DataError, SamplerNumericError
from dynmix.models import ChainStore, DataMode, DlmPriors, FitConfig, MixturePriors, PolyDlmState
from dynmix.services import poly_dlm
from dynmix.services.link_samplers import (
    AdaptiveScales,
    binomial_loglik,
    cwmh_sweep,
    get_link,
    probit_augment,
    probit_theta1,
)
from dynmix.services.mixture import initial_params, sample_allocations, sample_components

logger = logging.getLogger(__name__)

STREAMS = ("components", "allocations", "theta0", "variances", "states", "link")


def spawn_streams(seed_sequence: np.random.SeedSequence) -> Dict[str, np.random.Generator]:
    """One generator per group of conditionals, split deterministically from the chain seed."""
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, seed_sequence.spawn(len(STREAMS)))}


def validate_observations(y: Sequence[float], mode: DataMode) -> np.ndarray:
    values = np.asarray(y, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise DataError("observations must be a non-empty series")
    if not np.all(np.isfinite(values)):
        raise DataError("observations must be finite")
    if mode.kind == "binomial":
        if np.any(values != np.round(values)):
            raise DataError("binomial observations must be integer counts")
        if np.any(values < 0) or np.any(values > mode.trials):
            raise DataError(f"binomial observations must lie in 0..{mode.trials}")
    return values


def scalar_names(config: FitConfig) -> List[str]:
    names: List[str] = []
    if config.data_mode.kind == "mixture":
        names += ["mu_1", "phi_1", "mu_2", "phi_2"]
    names += [f"theta0_{k}" for k in range(1, config.p + 1)]
    names += [f"W_{k}" for k in range(1, config.p + 1)]
    if config.data_mode.kind == "gaussian":
        names.append("V")
    return names


class GibbsSampler:
    """One chain: mutable state, its random streams and adaptive proposal scales."""

    def __init__(
        self,
        config: FitConfig,
        y: Sequence[float],
        seed_sequence: Optional[np.random.SeedSequence] = None,
    ):
        self.config = config
        self.mode = config.data_mode
        self.y = validate_observations(y, self.mode)
        self.T = self.y.size
        self.link = get_link(config.effective_link)
        self.context = poly_dlm.DlmContext.for_length(self.T)
        self.dlm_priors = DlmPriors.from_dict(config.priors, config.p)
        self.streams = spawn_streams(seed_sequence or np.random.SeedSequence(config.seed))
        self.state = PolyDlmState.initial(self.streams["theta0"], config.p, self.T, self.dlm_priors)
        self.params = None
        self.mixture_priors = None
        if self.mode.kind == "mixture":
            self.mixture_priors = MixturePriors.from_dict(config.priors, self.y)
            self.params = initial_params(self.y, self.mixture_priors)
        self.scales = AdaptiveScales.for_length(self.T)
        self.loglik = binomial_loglik(self.mode.trials)
        self.alpha = self.link.inverse(self.state.block(1))
        self.iteration = 0

    @property
    def uses_cwmh(self) -> bool:
        return self.mode.kind != "gaussian" and self.link.name != "probit"

    @contextmanager
    def _guard(self, conditional: str) -> Iterator[None]:
        try:
            yield
        except SamplerNumericError as exc:
            if exc.iteration is not None:
                raise
            raise SamplerNumericError(
                exc.message, iteration=self.iteration, conditional=conditional, code=exc.code
            ) from exc

    def _responses(self) -> np.ndarray:
        return self.params.z if self.params is not None else self.y

    def _update_block(self, k: int) -> None:
        rng = self.streams
        if self.config.resample_theta0:
            with self._guard(f"theta0_{k}"):
                poly_dlm.sample_theta0(rng["theta0"], k, self.state, self.dlm_priors)
        if self.config.resample_variances:
            with self._guard(f"W_{k}"):
                poly_dlm.sample_W(rng["variances"], k, self.state, self.dlm_priors)
        if k > 1:
            with self._guard(f"theta_{k}"):
                poly_dlm.sample_theta_block(rng["states"], k, self.state, self.context)

    def _update_first_block(self) -> None:
        rng = self.streams
        with self._guard("theta_1"):
            if self.mode.kind == "gaussian":
                poly_dlm.sample_theta_block_gaussian(rng["states"], self.state, self.y, self.context)
            elif self.link.name == "probit":
                latent = probit_augment(rng["link"], self.state, self._responses())
                probit_theta1(rng["states"], self.state, latent, self.context)
            else:
                cwmh_sweep(rng["link"], self.state, self._responses(), self.link, self.scales, self.loglik)
        if self.mode.kind == "gaussian" and self.config.resample_variances:
            with self._guard("V"):
                poly_dlm.sample_V(rng["variances"], self.state, self.dlm_priors, self.y)

    def step(self) -> None:
        self.iteration += 1
        if self.params is not None:
            with self._guard("components"):
                sample_components(self.streams["components"], self.params, self.mixture_priors, self.y)
            with self._guard("allocations"):
                sample_allocations(self.streams["allocations"], self.params, self.alpha, self.y)
        for k in range(self.config.p, 0, -1):
            self._update_block(k)
        self._update_first_block()
        self.alpha = self.link.inverse(self.state.block(1))
        if not np.all(np.isfinite(self.alpha)):
            raise SamplerNumericError(
                "non-finite weight curve", iteration=self.iteration, conditional="alpha"
            )

    def _record(self, store: ChainStore, slot: int) -> None:
        values = store.scalars
        if self.params is not None:
            values["mu_1"][slot], values["mu_2"][slot] = self.params.mu
            values["phi_1"][slot], values["phi_2"][slot] = self.params.phi
        for k in range(1, self.config.p + 1):
            values[f"theta0_{k}"][slot] = self.state.theta0[k - 1]
            values[f"W_{k}"][slot] = self.state.W[k - 1]
        if "V" in values:
            values["V"][slot] = self.state.V
        store.alpha[slot] = self.alpha

    def run(self) -> ChainStore:
        config = self.config
        label = "level" if self.mode.kind == "gaussian" else "alpha"
        store = ChainStore.allocate(config, self.T, scalar_names(config), label)
        started = time.monotonic()
        slot = 0
        for iteration in range(1, config.iterations + 1):
            self.step()
            if ChainStore.is_kept(iteration, config.burn_in, config.thin):
                self._record(store, slot)
                slot += 1
            if config.progress_every and iteration % config.progress_every == 0:
                self._log_progress(iteration, started)
        if self.uses_cwmh:
            store.acceptance = self.scales.acceptance_rates()
            store.nonfinite_proposals = self.scales.nonfinite
        return store

    def _log_progress(self, iteration: int, started: float) -> None:
        elapsed = time.monotonic() - started
        if self.uses_cwmh:
            logger.info(
                "iteration %d/%d (%.1fs), mean acceptance %.3f",
                iteration,
                self.config.iterations,
                elapsed,
                float(np.mean(self.scales.acceptance_rates())),
            )
        else:
            logger.info("iteration %d/%d (%.1fs)", iteration, self.config.iterations, elapsed)


def run_fit(
    config: FitConfig,
    y: Sequence[float],
    seed_sequence: Optional[np.random.SeedSequence] = None,
) -> ChainStore:
    return GibbsSampler(config, y, seed_sequence).run()


def run_binomial_fit(config: FitConfig, counts: Sequence[float], trials: int) -> ChainStore:
    """Steps 3-7 on binomial counts; probit is only accepted for binary data."""
    return run_fit(replace(config, mode=f"binomial:{trials}"), counts)


def run_gaussian_fit(config: FitConfig, y: Sequence[float]) -> ChainStore:
    """Identity-link fit whose stored curve is the level theta_t1."""
    return run_fit(replace(config, mode="gaussian"), y)


def _run_chain(config: FitConfig, y: np.ndarray, seed_sequence: np.random.SeedSequence) -> ChainStore:
    return run_fit(config, y, seed_sequence)


def run_chains(
    config: FitConfig,
    y: Sequence[float],
    chains: int,
    max_workers: Optional[int] = None,
) -> List[ChainStore]:
    """Independent chains seeded from children of the configured seed, one process each."""
    if chains < 1:
        raise ConfigurationError("number of chains must be >= 1")
    values = np.asarray(y, dtype=float)
    seeds = np.random.SeedSequence(config.seed).spawn(chains)
    if chains == 1:
        return [_run_chain(config, values, seeds[0])]
    with ProcessPoolExecutor(max_workers=max_workers or chains) as pool:
        futures = [pool.submit(_run_chain, config, values, seed) for seed in seeds]
        return [future.result() for future in futures]


class GaussianDlmJointModel:
    """Gaussian DLM exposed to the joint-distribution test harness.

    Parameters are (theta_0, W, V, states); data is the observed series.
    """

    def __init__(self, config: FitConfig, T: int):
        config = replace(config, mode="gaussian", progress_every=0)
        self.sampler = GibbsSampler(config, np.zeros(T))

    @property
    def state(self) -> PolyDlmState:
        return self.sampler.state

    def draw_prior(self, rng: np.random.Generator) -> None:
        self.sampler.state, _ = poly_dlm.simulate_prior(
            rng, self.sampler.config.p, self.sampler.T, self.sampler.dlm_priors
        )

    def draw_likelihood(self, rng: np.random.Generator) -> None:
        state = self.sampler.state
        self.sampler.y = state.block(1) + rng.normal(0.0, np.sqrt(state.V), size=state.T)

    def draw_posterior(self, rng: np.random.Generator) -> None:
        self.sampler.streams = dict.fromkeys(STREAMS, rng)
        self.sampler.step()

    def statistics(self) -> Dict[str, float]:
        state = self.sampler.state
        stats = {f"theta0_{k}": float(state.theta0[k - 1]) for k in range(1, state.p + 1)}
        stats.update({f"W_{k}": float(state.W[k - 1]) for k in range(1, state.p + 1)})
        stats["V"] = state.V
        return stats
