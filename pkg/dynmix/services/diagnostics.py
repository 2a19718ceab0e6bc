"""Posterior summaries, interval estimates and sampler checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import ks_2samp

from dynmix.errors import DataError, InvalidDimensionError, UsageError
from dynmix.models import ChainStore

DEFAULT_MASS = 0.9
MIN_DRAWS = 10

SUMMARY_COLUMNS = ["quantity", "point", "lower", "upper"]
CURVE_COLUMNS = ["index", "median", "lower", "upper"]


@dataclass(frozen=True)
class HpdInterval:
    lower: float
    upper: float
    mass: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _check_mass(mass: float) -> float:
    if not 0.0 < mass < 1.0:
        raise UsageError(f"interval mass must lie in (0, 1), got {mass}")
    return float(mass)


def _sorted_draws(draws: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    values = np.asarray(draws, dtype=float)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if values.ndim != 2:
        raise InvalidDimensionError("draws must be a vector or a (draws, series) matrix")
    if values.shape[0] < MIN_DRAWS:
        raise DataError(f"at least {MIN_DRAWS} draws are required, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise DataError("draws must be finite")
    return np.sort(values, axis=0)


def window_size(n: int, mass: float) -> int:
    """Number of order statistics an interval of nominal ``mass`` must contain."""
    return min(n, max(1, math.ceil(mass * n - 1e-9)))


def hpd_bounds(draws: np.ndarray, mass: float = DEFAULT_MASS) -> Tuple[np.ndarray, np.ndarray]:
    """Column-wise shortest windows of ceil(mass * n) order statistics.

    Ties go to the window with the smallest lower endpoint.
    """
    ordered = _sorted_draws(draws)
    n = ordered.shape[0]
    m = window_size(n, _check_mass(mass))
    widths = ordered[m - 1:] - ordered[: n - m + 1]
    start = np.argmin(widths, axis=0)
    columns = np.arange(ordered.shape[1])
    return ordered[start, columns], ordered[start + m - 1, columns]


def hpd(draws: Sequence[float], mass: float = DEFAULT_MASS) -> HpdInterval:
    values = np.asarray(draws, dtype=float)
    if values.ndim != 1:
        raise InvalidDimensionError("hpd expects a vector of draws")
    lower, upper = hpd_bounds(values, mass)
    return HpdInterval(float(lower[0]), float(upper[0]), mass)


def equal_tail(draws: Sequence[float], mass: float = DEFAULT_MASS) -> HpdInterval:
    """Central window with the same number of order statistics as ``hpd``."""
    ordered = _sorted_draws(draws)[:, 0]
    n = ordered.size
    m = window_size(n, _check_mass(mass))
    start = (n - m) // 2
    return HpdInterval(float(ordered[start]), float(ordered[start + m - 1]), mass)


def _curve_draws(source: Union[ChainStore, np.ndarray]) -> np.ndarray:
    draws = source.alpha if isinstance(source, ChainStore) else np.asarray(source, dtype=float)
    if draws.ndim != 2 or draws.shape[0] == 0 or draws.shape[1] == 0:
        raise DataError("no curve draws to summarize")
    return draws


def summarize_curve(source: Union[ChainStore, np.ndarray], mass: float = DEFAULT_MASS) -> pd.DataFrame:
    """Per-time median and HPD bounds of the stored curve, one row per time."""
    draws = _curve_draws(source)
    lower, upper = hpd_bounds(draws, mass)
    return pd.DataFrame(
        {
            "index": np.arange(1, draws.shape[1] + 1),
            "median": np.median(draws, axis=0),
            "lower": lower,
            "upper": upper,
        },
        columns=CURVE_COLUMNS,
    )


def summarize_parameters(
    source: Union[ChainStore, Mapping[str, np.ndarray]],
    mass: float = DEFAULT_MASS,
) -> pd.DataFrame:
    """One row per scalar quantity: median with HPD bounds."""
    scalars = source.scalars if isinstance(source, ChainStore) else source
    if not scalars:
        raise DataError("no scalar draws to summarize")
    rows = []
    for name, draws in scalars.items():
        interval = hpd(draws, mass)
        rows.append({"quantity": name, "point": float(np.median(draws)), "lower": interval.lower, "upper": interval.upper})
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def summary_table(
    scalars: Mapping[str, np.ndarray],
    curve: Optional[np.ndarray] = None,
    curve_label: str = "alpha",
    mass: float = DEFAULT_MASS,
) -> pd.DataFrame:
    """Scalar rows followed, when curve draws are given, by one ``<label>_<t>`` row per time."""
    table = summarize_parameters(scalars, mass)
    if curve is None or np.asarray(curve).size == 0:
        return table
    per_time = summarize_curve(curve, mass)
    per_time = pd.DataFrame(
        {
            "quantity": [f"{curve_label}_{t}" for t in per_time["index"]],
            "point": per_time["median"],
            "lower": per_time["lower"],
            "upper": per_time["upper"],
        },
        columns=SUMMARY_COLUMNS,
    )
    return pd.concat([table, per_time], ignore_index=True)


def curve_rmse(estimate: Sequence[float], truth: Sequence[float]) -> float:
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise InvalidDimensionError(f"estimate has shape {estimate.shape}, truth has {truth.shape}")
    return float(np.sqrt(np.mean((estimate - truth) ** 2)))


def acceptance_report(store: ChainStore) -> pd.DataFrame:
    if store.acceptance is None:
        raise DataError("chain has no Metropolis-Hastings acceptance record")
    return pd.DataFrame(
        {"index": np.arange(1, store.acceptance.size + 1), "acceptance": store.acceptance},
        columns=["index", "acceptance"],
    )


class JointModel(Protocol):
    """Model with exact prior, likelihood and one-step posterior kernels."""

    def draw_prior(self, rng: np.random.Generator) -> None: ...

    def draw_likelihood(self, rng: np.random.Generator) -> None: ...

    def draw_posterior(self, rng: np.random.Generator) -> None: ...

    def statistics(self) -> Dict[str, float]: ...


@dataclass(frozen=True)
class GewekeResult:
    quantity: str
    ks_pvalue: float
    z_score: float
    forward_mean: float
    chain_mean: float


def _batch_means_se(values: np.ndarray, batches: int) -> float:
    size = values.size // batches
    if size < 1:
        return float(np.std(values, ddof=1) / np.sqrt(values.size))
    means = values[: size * batches].reshape(batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(batches))


def _collect(records: List[Dict[str, float]]) -> Dict[str, np.ndarray]:
    return {name: np.array([record[name] for record in records]) for name in records[0]}


def geweke_test(
    model: JointModel,
    n_samples: int,
    rng: np.random.Generator,
    *,
    thin: int = 1,
    batches: int = 50,
) -> Dict[str, GewekeResult]:
    """Compare forward (prior then data) draws with successive posterior-data alternation.

    Both samplers target the joint distribution of parameters and data, so
    every statistic should agree in distribution when the posterior kernel is
    correct.
    """
    if n_samples < MIN_DRAWS or thin < 1:
        raise UsageError(f"need at least {MIN_DRAWS} samples and thin >= 1")
    forward = []
    for _ in range(n_samples):
        model.draw_prior(rng)
        model.draw_likelihood(rng)
        forward.append(model.statistics())

    successive = []
    model.draw_prior(rng)
    model.draw_likelihood(rng)
    for _ in range(n_samples):
        for _ in range(thin):
            model.draw_posterior(rng)
            model.draw_likelihood(rng)
        successive.append(model.statistics())

    marginal, chain = _collect(forward), _collect(successive)
    results = {}
    for name in marginal:
        a, b = marginal[name], chain[name]
        se = math.sqrt(np.var(a, ddof=1) / a.size + _batch_means_se(b, batches) ** 2)
        z = (a.mean() - b.mean()) / se if se > 0 else 0.0
        results[name] = GewekeResult(
            quantity=name,
            ks_pvalue=float(ks_2samp(a, b).pvalue),
            z_score=float(z),
            forward_mean=float(a.mean()),
            chain_mean=float(b.mean()),
        )
    return results
