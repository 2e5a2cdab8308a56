"""Leading-subspace projectors, their time averages, and dynamics measures.

The rank-k projector at a date is the sum of outer products of the top-k
eigenvectors. Its time average has trace k and eigenvalues in [0, 1]; how
far those eigenvalues sit below one is what the fluctuation index and the
scalar lagged correlation quantify.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ContractViolationError,
    DegenerateSeriesError,
    DegenerateSubspaceWarning,
    ParameterError,
)
from .spectral import EigenSystem, SpectrumSeries, eigendecompose

DEGENERACY_RTOL = 1e-10
LAGGED_KERNEL_LENGTH = 21


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto a leading eigen-subspace of rank k."""

    k: int
    matrix: np.ndarray


@dataclass(frozen=True)
class MeanProjector:
    """Time average of rank-k projectors; trace k, eigenvalues in [0, 1]."""

    k: int
    matrix: np.ndarray
    sample_count: int


class FluctuationIndex(NamedTuple):
    gamma: float
    gamma_max: float
    ratio: float


def leading_projector(eig: EigenSystem, k: int) -> Projector:
    """Projector onto the span of the top-k eigenvectors.

    Warns when the spectrum is nearly degenerate at the cut, where the
    subspace is ill-defined.
    """
    n = eig.size
    if not 1 <= k <= n:
        raise ParameterError(f"rank k={k} outside [1, {n}]")
    if k < n and eig.values[k - 1] - eig.values[k] < DEGENERACY_RTOL * abs(eig.values[0]):
        warnings.warn(
            f"eigenvalue gap at rank {k} is below the degeneracy tolerance; "
            "the leading subspace is ill-defined at the cut",
            DegenerateSubspaceWarning,
            stacklevel=2,
        )
    vk = eig.vectors[:, :k]
    mat = vk @ vk.T
    return Projector(k, (mat + mat.T) / 2.0)


def projector_series(series: SpectrumSeries, k: int) -> np.ndarray:
    """Stack of per-date rank-k projectors, shape (T, N, N)."""
    if series.vectors is None:
        raise ContractViolationError("spectrum series was computed without vectors")
    n = series.n_assets
    if not 1 <= k <= n:
        raise ParameterError(f"rank k={k} outside [1, {n}]")
    vk = series.vectors[:, :, :k]
    stack = vk @ np.transpose(vk, (0, 2, 1))
    return (stack + np.transpose(stack, (0, 2, 1))) / 2.0


def mean_projector(series: SpectrumSeries, k: int) -> MeanProjector:
    """Arithmetic time average of the per-date rank-k projectors."""
    stack = projector_series(series, k)
    if stack.shape[0] < 1:
        raise ParameterError("empty spectrum series")
    mean = stack.mean(axis=0)
    return MeanProjector(k, (mean + mean.T) / 2.0, stack.shape[0])


def projector_spectrum(mp: MeanProjector) -> np.ndarray:
    """Descending eigenvalues of the mean projector; they sum to k."""
    return eigendecompose(mp.matrix).values


def fluctuation_index(mp: MeanProjector) -> FluctuationIndex:
    """gamma = 1 - tr(<P>^2)/k, its maximum 1 - k/N, and their ratio.

    A static subspace gives gamma 0; full exploration of the space gives
    gamma_max. The ratio is NaN at k = N where the maximum vanishes.
    """
    n = mp.matrix.shape[0]
    tr_sq = float(np.sum(mp.matrix * mp.matrix))
    gamma = 1.0 - tr_sq / mp.k
    gamma_max = 1.0 - mp.k / n
    ratio = gamma / gamma_max if gamma_max > 0 else float("nan")
    return FluctuationIndex(gamma, gamma_max, ratio)


def matrix_lagged_correlation(series, lags) -> np.ndarray:
    """Trace-normalized autocorrelation of a matrix time series.

    rho(tau) = tr<(X(t)-<X>)(X(t+tau)-<X>)> / tr<(X-<X>)^2> with <X> the
    global time average; rho(0) is 1 exactly. The normalization uses the
    full-sample mean, so finite samples may marginally exceed |rho| = 1;
    that soft bound is a diagnostic, not an error.
    """
    matrices = np.asarray(getattr(series, "matrices", series), dtype=float)
    if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
        raise ParameterError(f"expected a (T,N,N) stack, got {matrices.shape}")
    t_len = matrices.shape[0]
    lags = [int(l) for l in lags]
    if any(l < 0 for l in lags):
        raise ParameterError("lags must be non-negative")
    if lags and max(lags) + 1 >= t_len:
        raise ParameterError(
            f"lag {max(lags)} too large for a series of length {t_len}"
        )

    centered = matrices - matrices.mean(axis=0)
    products = np.einsum("tij,tij->t", centered, centered)
    denom = products.mean()
    scale = np.einsum("tij,tij->t", matrices, matrices).mean()
    if denom <= 1e-24 * max(scale, 1e-300):
        raise DegenerateSeriesError("matrix series is constant; rho is undefined")

    out = np.empty(len(lags))
    for i, lag in enumerate(lags):
        if lag == 0:
            out[i] = 1.0
            continue
        cross = np.einsum("tij,tij->", centered[:-lag], centered[lag:])
        out[i] = cross / (t_len - lag) / denom
    return out
