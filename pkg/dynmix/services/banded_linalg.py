"""Banded symmetric positive-definite matrices and precision-based Gaussian sampling.

Matrices are kept in LAPACK lower-band storage: ``bands[d, j]`` holds entry
``A[j + d, j]`` for ``d = 0..b``; slots past the end of a sub-diagonal are zero
and never read. The first-difference operator H (ones on the diagonal, minus
ones on the first sub-diagonal) and B = I - H are never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve_banded, lapack, solve_banded

from dynmix.errors import InvalidDimensionError, NotPositiveDefiniteError, SamplerNumericError


def _as_vector(x: Sequence[float], length: Optional[int] = None) -> np.ndarray:
    vec = np.asarray(x, dtype=float)
    if vec.ndim != 1 or vec.size < 1:
        raise InvalidDimensionError("expected a non-empty vector")
    if length is not None and vec.size != length:
        raise InvalidDimensionError(f"expected a vector of length {length}, got {vec.size}")
    return vec


@dataclass(frozen=True)
class BandedSpd:
    bands: np.ndarray

    def __post_init__(self) -> None:
        bands = np.array(self.bands, dtype=float, ndmin=2)
        if bands.ndim != 2 or bands.shape[1] < 1:
            raise InvalidDimensionError("bands must have shape (bandwidth + 1, T) with T >= 1")
        for d in range(1, bands.shape[0]):
            bands[d, max(bands.shape[1] - d, 0):] = 0.0
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    @classmethod
    def from_diagonals(cls, diagonals: Sequence[Sequence[float]]) -> "BandedSpd":
        """Build from the main diagonal followed by successive sub-diagonals."""
        main = _as_vector(diagonals[0])
        bands = np.zeros((len(diagonals), main.size))
        bands[0] = main
        for d, values in enumerate(diagonals[1:], start=1):
            sub = np.asarray(values, dtype=float)
            if sub.shape != (max(main.size - d, 0),):
                raise InvalidDimensionError(f"sub-diagonal {d} must have length {main.size - d}")
            bands[d, : main.size - d] = sub
        return cls(bands)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "BandedSpd":
        return cls(_as_vector(values)[np.newaxis, :])

    @property
    def dim(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def scaled(self, factor: float) -> "BandedSpd":
        return BandedSpd(self.bands * factor)

    def __add__(self, other: "BandedSpd") -> "BandedSpd":
        if not isinstance(other, BandedSpd):
            return NotImplemented
        if other.dim != self.dim:
            raise InvalidDimensionError(f"cannot add {self.dim}x{self.dim} and {other.dim}x{other.dim}")
        rows = max(self.bands.shape[0], other.bands.shape[0])
        total = np.zeros((rows, self.dim))
        total[: self.bands.shape[0]] += self.bands
        total[: other.bands.shape[0]] += other.bands
        return BandedSpd(total)

    def matvec(self, x: Sequence[float]) -> np.ndarray:
        vec = _as_vector(x, self.dim)
        out = self.bands[0] * vec
        T = self.dim
        for d in range(1, self.bandwidth + 1):
            if d >= T:
                break
            sub = self.bands[d, : T - d]
            out[d:] += sub * vec[: T - d]
            out[: T - d] += sub * vec[d:]
        return out


@dataclass(frozen=True)
class BandedCholesky:
    """Lower banded factor L with A = L L^T, same storage layout as BandedSpd."""

    factor: np.ndarray

    @property
    def dim(self) -> int:
        return self.factor.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.factor.shape[0] - 1

    def solve(self, rhs: Sequence[float]) -> np.ndarray:
        """Solve (L L^T) x = rhs."""
        return cho_solve_banded((self.factor, True), _as_vector(rhs, self.dim))

    def solve_lower(self, rhs: Sequence[float]) -> np.ndarray:
        """Solve L x = rhs."""
        return solve_banded((self.bandwidth, 0), self.factor, _as_vector(rhs, self.dim))

    def solve_upper(self, rhs: Sequence[float]) -> np.ndarray:
        """Solve L^T x = rhs."""
        b = self.bandwidth
        upper = np.zeros_like(self.factor)
        # L^T[i, i + d] = L[i + d, i] lives at upper[b - d, i + d].
        for d in range(b + 1):
            upper[b - d, d:] = self.factor[d, : self.dim - d]
        return solve_banded((0, b), upper, _as_vector(rhs, self.dim))


def build_HtH(T: int, scale: float = 1.0) -> BandedSpd:
    """scale * H^T H: tridiagonal with diagonal (2, ..., 2, 1) and sub-diagonal -1."""
    if T < 1:
        raise InvalidDimensionError("T must be >= 1")
    main = np.full(T, 2.0 * scale)
    main[-1] = scale
    return BandedSpd.from_diagonals([main, np.full(T - 1, -scale)])


def build_BtB(T: int, scale: float = 1.0) -> BandedSpd:
    """scale * B^T B = scale * diag(1, ..., 1, 0)."""
    if T < 1:
        raise InvalidDimensionError("T must be >= 1")
    main = np.full(T, float(scale))
    main[-1] = 0.0
    return BandedSpd.diagonal(main)


def build_identity(T: int, scale: float = 1.0) -> BandedSpd:
    if T < 1:
        raise InvalidDimensionError("T must be >= 1")
    return BandedSpd.diagonal(np.full(T, float(scale)))


def apply_H(x: Sequence[float]) -> np.ndarray:
    """First differences with a zero predecessor: (Hx)_t = x_t - x_{t-1}."""
    vec = _as_vector(x)
    return np.diff(vec, prepend=0.0)


def apply_lagged_cumsum(x: Sequence[float]) -> np.ndarray:
    """(H^{-1} - I) x, i.e. entry t is the sum of x_s over s < t."""
    vec = _as_vector(x)
    out = np.zeros_like(vec)
    out[1:] = np.cumsum(vec[:-1])
    return out


def apply_HtB(x: Sequence[float]) -> np.ndarray:
    """(H^T B) x: entry i is x_{i-1} - x_i for i < T and x_{T-1} at i = T."""
    vec = _as_vector(x)
    out = np.zeros_like(vec)
    out[:-1] -= vec[:-1]
    out[1:] += vec[:-1]
    return out


def apply_BtH(x: Sequence[float]) -> np.ndarray:
    """(B^T H) x: entry i is x_{i+1} - x_i for i < T and 0 at i = T."""
    vec = _as_vector(x)
    out = np.zeros_like(vec)
    out[:-1] = vec[1:] - vec[:-1]
    return out


def cholesky(A: BandedSpd, jitter: float = 0.0) -> BandedCholesky:
    """Banded Cholesky without pivoting; fill stays inside the band."""
    if not np.all(np.isfinite(A.bands)):
        raise SamplerNumericError("precision matrix has non-finite entries")
    bandwidth = min(A.bandwidth, A.dim - 1)
    ab = np.array(A.bands[: bandwidth + 1], dtype=float, order="F")
    if jitter:
        ab[0] += jitter
    factor, info = lapack.dpbtrf(ab, lower=1)
    if info > 0:
        raise NotPositiveDefiniteError(int(info))
    if info < 0:
        raise InvalidDimensionError(f"illegal banded storage (argument {-info})")
    for d in range(1, bandwidth + 1):
        factor[d, A.dim - d:] = 0.0
    return BandedCholesky(factor)


def sample_gaussian_precision(
    rng: np.random.Generator,
    P: BandedCholesky,
    b_vec: Sequence[float],
    noise: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Draw from N(P^{-1} b_vec, P^{-1}) given the Cholesky factor of P.

    ``noise`` overrides the standard-normal vector; zeros return the mean.
    """
    mean = P.solve(_as_vector(b_vec, P.dim))
    zeta = rng.standard_normal(P.dim) if noise is None else _as_vector(noise, P.dim)
    return mean + P.solve_upper(zeta)
