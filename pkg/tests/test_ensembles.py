import numpy as np
import pytest

from covspec import (
    EnsembleSpec,
    generate_returns,
    top_eigenvalue_oracle,
)
from covspec.errors import ParameterError
from testutil import correlation_from_iid


def test_same_seed_is_bit_identical():
    spec = EnsembleSpec("gaussian-iid", 7, 50, seed=123)
    first = generate_returns(spec)
    second = generate_returns(spec)
    assert np.array_equal(first.returns, second.returns)
    assert first.dates == second.dates


def test_different_seeds_differ():
    a = generate_returns(EnsembleSpec("gaussian-iid", 4, 30, seed=1))
    b = generate_returns(EnsembleSpec("gaussian-iid", 4, 30, seed=2))
    assert not np.array_equal(a.returns, b.returns)


def test_gaussian_sample_variance_converges():
    panel = generate_returns(EnsembleSpec("gaussian-iid", 5, 10_000, seed=3))
    variances = panel.returns.var(axis=1)
    assert np.all(np.abs(variances - 1.0) < 5.0 / np.sqrt(10_000))


def test_student_is_unit_variance():
    panel = generate_returns(EnsembleSpec("student-iid", 5, 20_000, nu=5.0, seed=4))
    variances = panel.returns.var(axis=1)
    assert np.all(np.abs(variances - 1.0) < 0.15)


def test_one_factor_pairwise_correlation_is_beta_squared():
    beta = 0.6
    panel = generate_returns(EnsembleSpec("one-factor", 4, 30_000, beta=beta, seed=5))
    corr = np.corrcoef(panel.returns)
    off_diag = corr[np.triu_indices(4, k=1)]
    assert np.all(np.abs(off_diag - beta**2) < 0.03)


def test_one_factor_beta_zero_moments_match_gaussian():
    panel = generate_returns(EnsembleSpec("one-factor", 4, 20_000, beta=0.0, seed=6))
    assert np.abs(panel.returns.mean()) < 0.02
    assert np.all(np.abs(panel.returns.var(axis=1) - 1.0) < 0.05)
    corr = np.corrcoef(panel.returns)
    assert np.abs(corr[np.triu_indices(4, k=1)]).max() < 0.05


def test_invalid_specs_rejected():
    with pytest.raises(ParameterError):
        EnsembleSpec("uniform", 5, 10)
    with pytest.raises(ParameterError):
        EnsembleSpec("gaussian-iid", 0, 10)
    with pytest.raises(ParameterError):
        EnsembleSpec("gaussian-iid", 5, 1)
    with pytest.raises(ParameterError):
        EnsembleSpec("student-iid", 5, 10, nu=2.0)
    with pytest.raises(ParameterError):
        EnsembleSpec("one-factor", 5, 10, beta=1.0)
    with pytest.raises(ParameterError):
        EnsembleSpec("one-factor", 5, 10, beta=-0.1)


def test_oracle_values():
    assert top_eigenvalue_oracle(EnsembleSpec("one-factor", 10, 10, beta=0.0)) == 1.0
    assert top_eigenvalue_oracle(
        EnsembleSpec("one-factor", 50, 10, beta=0.5)
    ) == pytest.approx(13.25)
    # beta -> 1 approaches the perfectly correlated bound N
    near_one = top_eigenvalue_oracle(EnsembleSpec("one-factor", 10, 10, beta=0.9999))
    assert near_one == pytest.approx(10.0, abs=2e-3)


def test_oracle_requires_one_factor():
    with pytest.raises(ParameterError, match="one-factor"):
        top_eigenvalue_oracle(EnsembleSpec("gaussian-iid", 5, 10))


def test_one_factor_empirical_top_eigenvalue_near_oracle():
    spec = EnsembleSpec("one-factor", 50, 2000, beta=0.5, seed=7)
    corr = correlation_from_iid(n=50, t_eff=2000, seed=7, kind="one-factor", beta=0.5)
    top = np.linalg.eigvalsh(corr.matrices[0])[-1]
    oracle = top_eigenvalue_oracle(spec)
    assert abs(top - oracle) / oracle < 0.10


def test_asset_ids_unique_and_dates_increasing():
    panel = generate_returns(EnsembleSpec("gaussian-iid", 12, 40, seed=8))
    assert len(set(panel.asset_ids)) == 12
    assert all(a < b for a, b in zip(panel.dates, panel.dates[1:]))
