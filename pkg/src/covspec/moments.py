"""Rolling weighted covariance series and correlation normalization.

The estimator at date t is the weighted cross product of the L most recent
return vectors,

    Sigma(t) = sum_{i=0}^{L-1} lambda(i) * r(t-i) r(t-i)',

with no mean subtraction. Rectangular and exponential kernels admit an exact
sliding recursion; long-memory kernels are recomputed per date.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .errors import DegenerateAssetError, InsufficientDataError, ParameterError
from .kernels import EXPONENTIAL, RECTANGULAR, WeightKernel
from .panel import ReturnPanel

COVARIANCE = "covariance"
CORRELATION = "correlation"

VARIANCE_FLOOR = 1e-16


@dataclass(frozen=True)
class CovarianceSeries:
    """Time-indexed sequence of symmetric N x N matrices of one flavor."""

    flavor: str
    dates: tuple[str, ...]
    matrices: np.ndarray
    kernel: WeightKernel
    assets: tuple[str, ...]

    def __post_init__(self):
        matrices = np.asarray(self.matrices, dtype=float)
        object.__setattr__(self, "matrices", matrices)
        if matrices.ndim != 3 or matrices.shape[1] != matrices.shape[2]:
            raise ParameterError(f"matrix stack must be (T,N,N), got {matrices.shape}")
        if matrices.shape[0] != len(self.dates):
            raise ParameterError(
                f"{len(self.dates)} dates but {matrices.shape[0]} matrices"
            )

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return self.matrices.shape[1]


def _resolve_eval_indices(returns: ReturnPanel, kernel: WeightKernel, eval_dates):
    """Map the requested evaluation dates onto return-panel indices."""
    dates = returns.dates
    first_feasible = kernel.length - 1
    if first_feasible >= len(dates):
        raise InsufficientDataError(
            f"kernel needs {kernel.length} return dates, panel has {len(dates)}"
        )
    if eval_dates is None:
        return list(range(first_feasible, len(dates)))

    index_of = {d: j for j, d in enumerate(dates)}
    if isinstance(eval_dates, tuple) and len(eval_dates) == 2:
        start, end = eval_dates
        idx = [
            j
            for j, d in enumerate(dates)
            if (start is None or d >= start) and (end is None or d <= end)
        ]
        if not idx:
            raise InsufficientDataError(f"no panel dates inside [{start!r}, {end!r}]")
    else:
        idx = []
        for d in eval_dates:
            if d not in index_of:
                raise ParameterError(f"evaluation date {d!r} not in the return panel")
            idx.append(index_of[d])
    for j in idx:
        if j < first_feasible:
            raise InsufficientDataError(
                f"insufficient history at {dates[j]!r}; first feasible date is "
                f"{dates[first_feasible]!r}"
            )
    return idx


def _direct_matrix(r: np.ndarray, weights_rev: np.ndarray, j: int, length: int):
    window = r[:, j - length + 1 : j + 1]
    cov = (window * weights_rev) @ window.T
    return (cov + cov.T) / 2.0


def rolling_covariance(
    returns: ReturnPanel,
    kernel: WeightKernel,
    eval_dates=None,
    *,
    method: str = "auto",
    threads: int = 1,
) -> CovarianceSeries:
    """Weighted covariance at each evaluation date.

    ``eval_dates`` is None for every feasible date, a (start, end) label pair,
    or an explicit list of dates. ``method`` is "direct", "incremental", or
    "auto" (incremental for rectangular/exponential kernels over consecutive
    dates, direct otherwise).
    """
    if method not in ("auto", "direct", "incremental"):
        raise ParameterError(f"unknown method {method!r}")
    idx = _resolve_eval_indices(returns, kernel, eval_dates)
    consecutive = all(b == a + 1 for a, b in zip(idx, idx[1:]))
    recursive_scheme = kernel.scheme in (RECTANGULAR, EXPONENTIAL)
    if method == "auto":
        method = "incremental" if (recursive_scheme and consecutive) else "direct"
    if method == "incremental":
        if not recursive_scheme:
            raise ParameterError(
                f"no exact sliding update for {kernel.scheme!r} kernels"
            )
        if not consecutive:
            raise ParameterError("incremental method needs consecutive evaluation dates")

    r = returns.returns
    n = returns.n_assets
    length = kernel.length
    weights_rev = kernel.weights[::-1]
    matrices = np.empty((len(idx), n, n))

    if method == "direct":
        results = parallel_map(
            lambda j: _direct_matrix(r, weights_rev, j, length), idx, threads
        )
        for t, mat in enumerate(results):
            matrices[t] = mat
    else:
        cov = _direct_matrix(r, weights_rev, idx[0], length)
        matrices[0] = cov
        head = kernel.weights[0]
        if kernel.scheme == RECTANGULAR:
            decay, tail = 1.0, head
        else:
            mu = kernel.params["mu"]
            decay, tail = mu, head * mu**length
        for t, j in enumerate(idx[1:], start=1):
            new = r[:, j]
            old = r[:, j - length]
            cov = decay * cov + head * np.outer(new, new) - tail * np.outer(old, old)
            cov = (cov + cov.T) / 2.0
            matrices[t] = cov

    dates = tuple(returns.dates[j] for j in idx)
    return CovarianceSeries(COVARIANCE, dates, matrices, kernel, returns.asset_ids)


def to_correlation(
    series: CovarianceSeries, variance_floor: float = VARIANCE_FLOOR
) -> CovarianceSeries:
    """Normalize each covariance matrix to unit diagonal."""
    if series.flavor != COVARIANCE:
        raise ParameterError(f"expected a covariance series, got {series.flavor!r}")
    out = np.empty_like(series.matrices)
    for t, cov in enumerate(series.matrices):
        diag = np.diag(cov)
        low = np.nonzero(diag <= variance_floor)[0]
        if low.size:
            a = int(low[0])
            raise DegenerateAssetError(
                f"variance {diag[a]!r} of asset {series.assets[a]!r} at date "
                f"{series.dates[t]!r} is at or below the floor {variance_floor}"
            )
        inv_s = 1.0 / np.sqrt(diag)
        corr = cov * np.outer(inv_s, inv_s)
        np.fill_diagonal(corr, 1.0)
        out[t] = np.clip(corr, -1.0, 1.0)
    return CovarianceSeries(CORRELATION, series.dates, out, series.kernel, series.assets)


def dump_matrices(series: CovarianceSeries, directory) -> list[str]:
    """Write one dense lower-triangle CSV per date; returns the file names."""
    os.makedirs(directory, exist_ok=True)
    names = []
    for t, date in enumerate(series.dates):
        name = f"{series.flavor}_{date}.csv"
        mat = series.matrices[t]
        with open(os.path.join(directory, name), "w") as fh:
            for i in range(mat.shape[0]):
                fh.write(",".join(f"{v:.17g}" for v in mat[i, : i + 1]) + "\n")
        names.append(name)
    return names
