from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from dynmix.errors import ConfigurationError, InvalidDimensionError, InvalidIndexError


LINK_NAMES = ("logit", "probit", "identity")
MODE_KINDS = ("mixture", "binomial", "gaussian")
PRIOR_KEYS = (
    "theta0_mean",
    "theta0_var",
    "w_shape",
    "w_rate",
    "v_shape",
    "v_rate",
    "mu_mean",
    "mu_var",
    "phi_shape",
    "phi_rate",
)

# Vague defaults.
DEFAULT_THETA0_MEAN = 0.0
DEFAULT_THETA0_VAR = 1.0
DEFAULT_GAMMA_SHAPE = 0.01
DEFAULT_GAMMA_RATE = 0.01
DEFAULT_MU_VAR_FACTOR = 10.0


def _coerce_int(data: Dict[str, Any], key: str, default: int) -> int:
    value = data.get(key, default)
    if isinstance(value, bool):
        raise ConfigurationError(f"'{key}' must be an integer, got {value!r}")
    try:
        coerced = int(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' must be an integer, got {value!r}") from None
    if coerced != value and not isinstance(value, str):
        raise ConfigurationError(f"'{key}' must be an integer, got {value!r}")
    return coerced


def _coerce_bool(value: object, default: bool) -> bool:
    if value is None:
        return default
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        lowered = value.lower()
        if lowered in {"true", "1", "yes", "on"}:
            return True
        if lowered in {"false", "0", "no", "off"}:
            return False
    raise ConfigurationError(f"expected a boolean, got {value!r}")


def _per_block(data: Dict[str, Any], key: str, default: float, size: int, *, positive: bool) -> np.ndarray:
    raw = data.get(key, default)
    try:
        values = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ConfigurationError(f"'{key}' must be a number or a list of numbers") from None
    if values.ndim == 0:
        values = np.full(size, float(values))
    if values.shape != (size,):
        raise ConfigurationError(f"'{key}' must be a scalar or a list of length {size}")
    if not np.all(np.isfinite(values)):
        raise ConfigurationError(f"'{key}' must be finite")
    if positive and np.any(values <= 0):
        raise ConfigurationError(f"'{key}' must be strictly positive")
    return values


def _positive_scalar(data: Dict[str, Any], key: str, default: float) -> float:
    return float(_per_block(data, key, default, 1, positive=True)[0])


@dataclass(frozen=True)
class DataMode:
    kind: str
    trials: int = 1

    @classmethod
    def parse(cls, text: str) -> "DataMode":
        raw = str(text).strip().lower()
        if raw == "bernoulli":
            return cls("binomial", 1)
        if raw in ("mixture", "gaussian"):
            return cls(raw)
        if raw.startswith("binomial"):
            _, _, n = raw.partition(":")
            try:
                trials = int(n) if n else 1
            except ValueError:
                raise ConfigurationError(f"invalid number of trials in mode '{text}'") from None
            if trials < 1:
                raise ConfigurationError(f"number of trials must be >= 1 in mode '{text}'")
            return cls("binomial", trials)
        raise ConfigurationError(f"unknown data mode '{text}'")

    def __str__(self) -> str:
        if self.kind == "binomial":
            return f"binomial:{self.trials}"
        return self.kind


@dataclass
class FitConfig:
    iterations: int = 220000
    burn_in: int = 20000
    thin: int = 200
    link: str = "logit"
    p: int = 2
    seed: int = 0
    mode: str = "mixture"
    progress_every: int = 1000
    resample_theta0: bool = True
    resample_variances: bool = True
    priors: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.mode = str(DataMode.parse(self.mode))
        self.link = str(self.link).lower()
        self.validate()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FitConfig":
        data = data if isinstance(data, dict) else {}
        defaults = cls.__dataclass_fields__
        priors = data.get("priors", {})
        if not isinstance(priors, dict):
            raise ConfigurationError("'priors' must be an object of prior hyperparameters")
        return cls(
            iterations=_coerce_int(data, "iterations", defaults["iterations"].default),
            burn_in=_coerce_int(data, "burn_in", defaults["burn_in"].default),
            thin=_coerce_int(data, "thin", defaults["thin"].default),
            link=str(data.get("link", defaults["link"].default)),
            p=_coerce_int(data, "p", defaults["p"].default),
            seed=_coerce_int(data, "seed", defaults["seed"].default),
            mode=str(data.get("mode", defaults["mode"].default)),
            progress_every=_coerce_int(data, "progress_every", defaults["progress_every"].default),
            resample_theta0=_coerce_bool(data.get("resample_theta0"), True),
            resample_variances=_coerce_bool(data.get("resample_variances"), True),
            priors=dict(priors),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "link": self.link,
            "p": self.p,
            "seed": self.seed,
            "mode": self.mode,
            "progress_every": self.progress_every,
            "resample_theta0": self.resample_theta0,
            "resample_variances": self.resample_variances,
            "priors": dict(self.priors),
        }

    @property
    def data_mode(self) -> DataMode:
        return DataMode.parse(self.mode)

    @property
    def effective_link(self) -> str:
        return "identity" if self.data_mode.kind == "gaussian" else self.link

    @property
    def kept_draws(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def validate(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.burn_in < 0 or self.burn_in >= self.iterations:
            raise ConfigurationError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thin < 1:
            raise ConfigurationError("thin must be >= 1")
        if self.kept_draws < 1:
            raise ConfigurationError("(iterations - burn_in) / thin must be >= 1")
        if self.p < 1:
            raise ConfigurationError("polynomial order p must be >= 1")
        if self.progress_every < 0:
            raise ConfigurationError("progress_every must be >= 0")
        if self.link not in LINK_NAMES:
            raise ConfigurationError(f"unknown link '{self.link}'")
        mode = self.data_mode
        if mode.kind != "gaussian" and self.link == "identity":
            raise ConfigurationError(f"identity link is only valid for gaussian data, not '{mode}'")
        if mode.kind == "binomial" and mode.trials > 1 and self.link == "probit":
            raise ConfigurationError(
                "probit augmentation is only appropriate for binary data", code="INCOMPATIBLE_LINK"
            )


@dataclass(frozen=True)
class DlmPriors:
    theta0_mean: np.ndarray
    theta0_var: np.ndarray
    w_shape: np.ndarray
    w_rate: np.ndarray
    v_shape: float = DEFAULT_GAMMA_SHAPE
    v_rate: float = DEFAULT_GAMMA_RATE

    @property
    def p(self) -> int:
        return len(self.theta0_mean)

    @classmethod
    def default(cls, p: int) -> "DlmPriors":
        return cls.from_dict({}, p)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], p: int) -> "DlmPriors":
        data = data if isinstance(data, dict) else {}
        return cls(
            theta0_mean=_per_block(data, "theta0_mean", DEFAULT_THETA0_MEAN, p, positive=False),
            theta0_var=_per_block(data, "theta0_var", DEFAULT_THETA0_VAR, p, positive=True),
            w_shape=_per_block(data, "w_shape", DEFAULT_GAMMA_SHAPE, p, positive=True),
            w_rate=_per_block(data, "w_rate", DEFAULT_GAMMA_RATE, p, positive=True),
            v_shape=_positive_scalar(data, "v_shape", DEFAULT_GAMMA_SHAPE),
            v_rate=_positive_scalar(data, "v_rate", DEFAULT_GAMMA_RATE),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta0_mean": self.theta0_mean.tolist(),
            "theta0_var": self.theta0_var.tolist(),
            "w_shape": self.w_shape.tolist(),
            "w_rate": self.w_rate.tolist(),
            "v_shape": self.v_shape,
            "v_rate": self.v_rate,
        }


@dataclass(frozen=True)
class MixturePriors:
    mu_mean: np.ndarray
    mu_var: np.ndarray
    phi_shape: np.ndarray
    phi_rate: np.ndarray

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], y: Sequence[float]) -> "MixturePriors":
        """Resolve mixture priors, anchoring the unset means on the data quartiles.

        Defaults: mu_1 ~ N(q1, 10 s^2), mu_2 ~ N(q3, 10 s^2), phi_k ~ Gamma(0.01, 0.01).
        A constant or single-point series falls back to s^2 = 1.
        """
        data = data if isinstance(data, dict) else {}
        values = np.asarray(y, dtype=float)
        q1, q3 = np.quantile(values, [0.25, 0.75])
        s2 = float(np.var(values, ddof=1)) if values.size > 1 else 1.0
        if not s2 > 0:
            s2 = 1.0
        return cls(
            mu_mean=_per_block(data, "mu_mean", [q1, q3], 2, positive=False),
            mu_var=_per_block(data, "mu_var", DEFAULT_MU_VAR_FACTOR * s2, 2, positive=True),
            phi_shape=_per_block(data, "phi_shape", DEFAULT_GAMMA_SHAPE, 2, positive=True),
            phi_rate=_per_block(data, "phi_rate", DEFAULT_GAMMA_RATE, 2, positive=True),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu_mean": self.mu_mean.tolist(),
            "mu_var": self.mu_var.tolist(),
            "phi_shape": self.phi_shape.tolist(),
            "phi_rate": self.phi_rate.tolist(),
        }


@dataclass
class PolyDlmState:
    """Reordered states of a p-th order polynomial DLM.

    ``theta[k - 1]`` holds block k, i.e. the k-th state component across all
    T times. Block and initial-value accessors take 1-based k; values past the
    last block read as zero.
    """

    theta: np.ndarray
    theta0: np.ndarray
    W: np.ndarray
    V: float = 1.0

    def __post_init__(self) -> None:
        self.theta = np.array(self.theta, dtype=float, ndmin=2)
        self.theta0 = np.array(self.theta0, dtype=float, ndmin=1)
        self.W = np.array(self.W, dtype=float, ndmin=1)
        self.V = float(self.V)
        p, T = self.theta.shape
        if p < 1 or T < 1:
            raise InvalidDimensionError("state must hold at least one block of length >= 1")
        if self.theta0.shape != (p,) or self.W.shape != (p,):
            raise InvalidDimensionError(f"theta0 and W must have length p={p}")
        if np.any(self.W <= 0) or not self.V > 0:
            raise ConfigurationError("innovation and observation variances must be positive")

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @property
    def T(self) -> int:
        return self.theta.shape[1]

    def _check_block(self, k: int) -> None:
        if not 1 <= k <= self.p:
            raise InvalidIndexError(f"block index {k} outside 1..{self.p}")

    def block(self, k: int) -> np.ndarray:
        self._check_block(k)
        return self.theta[k - 1]

    def next_block(self, k: int) -> np.ndarray:
        """Block k + 1, or zeros when k is the last block."""
        self._check_block(k)
        if k < self.p:
            return self.theta[k]
        return np.zeros(self.T)

    def initial_value(self, k: int) -> float:
        if k > self.p:
            return 0.0
        self._check_block(k)
        return float(self.theta0[k - 1])

    def copy(self) -> "PolyDlmState":
        return PolyDlmState(self.theta.copy(), self.theta0.copy(), self.W.copy(), self.V)

    @classmethod
    def initial(cls, rng: np.random.Generator, p: int, T: int, priors: DlmPriors) -> "PolyDlmState":
        """Zero states, unit variances and initial values drawn from their priors."""
        theta0 = rng.normal(priors.theta0_mean, np.sqrt(priors.theta0_var))
        return cls(theta=np.zeros((p, T)), theta0=theta0, W=np.ones(p), V=1.0)


@dataclass
class MixtureParams:
    mu: np.ndarray
    phi: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.array(self.mu, dtype=float)
        self.phi = np.array(self.phi, dtype=float)
        self.z = np.array(self.z, dtype=np.int8)
        if self.mu.shape != (2,) or self.phi.shape != (2,):
            raise InvalidDimensionError("mixture parameters must hold exactly two components")
        if np.any(self.phi <= 0):
            raise ConfigurationError("component precisions must be positive")

    def copy(self) -> "MixtureParams":
        return MixtureParams(self.mu.copy(), self.phi.copy(), self.z.copy())


@dataclass
class ChainStore:
    """Thinned posterior draws of one chain."""

    mode: str
    link: str
    iterations: int
    burn_in: int
    thin: int
    scalars: Dict[str, np.ndarray]
    alpha: np.ndarray
    curve_label: str = "alpha"
    acceptance: Optional[np.ndarray] = None
    nonfinite_proposals: int = 0

    @staticmethod
    def kept_count(iterations: int, burn_in: int, thin: int) -> int:
        return (iterations - burn_in) // thin

    @staticmethod
    def is_kept(iteration: int, burn_in: int, thin: int) -> bool:
        """Whether 1-based ``iteration`` is stored."""
        return iteration > burn_in and (iteration - burn_in) % thin == 0

    @classmethod
    def allocate(cls, config: FitConfig, T: int, names: Sequence[str], curve_label: str) -> "ChainStore":
        n = config.kept_draws
        return cls(
            mode=config.mode,
            link=config.effective_link,
            iterations=config.iterations,
            burn_in=config.burn_in,
            thin=config.thin,
            scalars={name: np.empty(n) for name in names},
            alpha=np.empty((n, T)),
            curve_label=curve_label,
        )

    @property
    def n_kept(self) -> int:
        return self.alpha.shape[0]

    @property
    def T(self) -> int:
        return self.alpha.shape[1]

    @property
    def scalar_names(self) -> List[str]:
        return list(self.scalars)


@dataclass
class RunManifest:
    command: str
    version: str
    seed: Optional[int]
    config: Dict[str, Any]
    data_checksum: Optional[str] = None
    duration_seconds: float = 0.0
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "data_checksum": self.data_checksum,
            "duration_seconds": round(self.duration_seconds, 3),
            "outputs": list(self.outputs),
        }
