"""Spectral and subspace diagnostics of rolling weighted covariance matrices."""

from .config import RunConfig, validate_config
from .ensembles import EnsembleSpec, generate_returns, top_eigenvalue_oracle
from .kernels import WeightKernel, build_kernel, effective_length
from .moments import (
    CORRELATION,
    COVARIANCE,
    CovarianceSeries,
    dump_matrices,
    rolling_covariance,
    to_correlation,
)
from .panel import (
    AssetSpec,
    IngestConfig,
    PricePanel,
    ReturnPanel,
    compute_returns,
    load_panel,
    make_business_dates,
    map_prices,
)
from .runner import ReportBundle, run_analysis, run_synth
from .spectral import (
    AnsatzFit,
    DensityBins,
    DensityCurve,
    DensityHistogram,
    EigenSystem,
    MeanSpectrum,
    SpectrumSeries,
    default_density_bins,
    default_fit_range,
    density_of_states_curve,
    eigendecompose,
    fit_ansatz,
    fit_mp_q,
    log_mean_spectrum,
    mp_density,
    mp_support,
    spectral_density,
    spectrum_series,
)
from .subspace import (
    FluctuationIndex,
    MeanProjector,
    Projector,
    fluctuation_index,
    leading_projector,
    matrix_lagged_correlation,
    mean_projector,
    projector_series,
    projector_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "AnsatzFit",
    "AssetSpec",
    "CORRELATION",
    "COVARIANCE",
    "CovarianceSeries",
    "DensityBins",
    "DensityCurve",
    "DensityHistogram",
    "EigenSystem",
    "EnsembleSpec",
    "FluctuationIndex",
    "IngestConfig",
    "MeanProjector",
    "MeanSpectrum",
    "PricePanel",
    "Projector",
    "ReportBundle",
    "ReturnPanel",
    "RunConfig",
    "SpectrumSeries",
    "WeightKernel",
    "build_kernel",
    "compute_returns",
    "default_density_bins",
    "default_fit_range",
    "density_of_states_curve",
    "dump_matrices",
    "effective_length",
    "eigendecompose",
    "fit_ansatz",
    "fit_mp_q",
    "fluctuation_index",
    "generate_returns",
    "leading_projector",
    "load_panel",
    "log_mean_spectrum",
    "make_business_dates",
    "map_prices",
    "matrix_lagged_correlation",
    "mean_projector",
    "mp_density",
    "mp_support",
    "projector_series",
    "projector_spectrum",
    "rolling_covariance",
    "run_analysis",
    "run_synth",
    "spectral_density",
    "spectrum_series",
    "to_correlation",
    "top_eigenvalue_oracle",
    "validate_config",
]
