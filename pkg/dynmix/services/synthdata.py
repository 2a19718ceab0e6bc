"""Synthetic weight curves and data designs for simulation studies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from dynmix.errors import ConfigurationError, UsageError
from dynmix.models import DataMode

CURVES = ("linear", "parabolic", "sinusoidal", "steps")
DESIGNS = ("bernoulli", "binomial", "gaussian", "mixture")

GAUSSIAN_NOISE_SD = 0.1
MIXTURE_MEANS = (0.0, 2.0)
MIXTURE_PRECISIONS = (4.0, 4.0)


@dataclass(frozen=True)
class SyntheticData:
    y: np.ndarray
    alpha: np.ndarray
    z: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return self.y.size


def time_grid(T: int) -> np.ndarray:
    """Left-closed grid t_i = (i - 1) / T on [0, 1)."""
    if T < 1:
        raise UsageError("series length must be >= 1")
    return np.arange(T) / T


def weight(kind: str, t: Union[float, Sequence[float]]) -> Union[float, np.ndarray]:
    """Evaluate one of the reference weight trajectories on [0, 1)."""
    grid = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(grid)) or np.any(grid < 0.0) or np.any(grid >= 1.0):
        raise UsageError("weight curves are defined on [0, 1)")
    if kind == "linear":
        values = 0.1 + 0.8 * grid
    elif kind == "parabolic":
        values = 3.0 * (grid - 0.5) ** 2 + 0.125
    elif kind == "sinusoidal":
        # Phase printed as t + pi; the curve is not at an extreme at t = 0.
        values = np.cos(2.0 * np.pi * (grid + np.pi)) / 2.5 + 0.5
    elif kind == "steps":
        values = np.select([grid < 0.3, grid < 0.7], [0.2, 0.8], default=0.3)
    else:
        raise UsageError(f"unknown curve '{kind}', expected one of {', '.join(CURVES)}")
    return float(values) if values.ndim == 0 else values


def generate_from_weights(rng: np.random.Generator, design: str, alpha: Sequence[float]) -> SyntheticData:
    """Draw one data set with the given per-time weights.

    ``design`` is ``bernoulli``, ``binomial:<n>``, ``gaussian`` or ``mixture``.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 1:
        raise UsageError("weights must be a non-empty series")
    if np.any(alpha < 0.0) or np.any(alpha > 1.0):
        raise UsageError("weights must lie in [0, 1]")
    try:
        mode = DataMode.parse(design)
    except ConfigurationError as exc:
        raise UsageError(f"unknown design '{design}'") from exc
    if mode.kind == "binomial":
        return SyntheticData(y=rng.binomial(mode.trials, alpha).astype(float), alpha=alpha)
    if mode.kind == "gaussian":
        return SyntheticData(y=alpha + rng.normal(0.0, GAUSSIAN_NOISE_SD, size=alpha.size), alpha=alpha)
    z = (rng.random(alpha.size) < alpha).astype(np.int8)
    means = np.asarray(MIXTURE_MEANS)[z]
    scales = 1.0 / np.sqrt(np.asarray(MIXTURE_PRECISIONS))[z]
    return SyntheticData(y=rng.normal(means, scales), alpha=alpha, z=z)


def generate(rng: np.random.Generator, design: str, kind: str, T: int) -> SyntheticData:
    return generate_from_weights(rng, design, weight(kind, time_grid(T)))
