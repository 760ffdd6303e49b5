import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evodyn.errors import DimensionError, ValidationError
from evodyn.model import (MarketParams, StrategyProfile, complete_market_sigma, derive_matrices,
                          two_asset_params, validate_params, zero_sum_basis)

import oracles


def test_section_five_setup_is_valid():
    params = MarketParams([0.5, 0.5], [0.0, 0.0], [[0.25, -0.25], [-0.25, 0.25]])
    prof = StrategyProfile([[-0.25, 0.25], [1.0, -1.0]])
    assert validate_params(params, prof).ok


def test_nonzero_sum_drift_is_flagged():
    res = validate_params(MarketParams([0.5, 0.5], [0.1, 0.0], np.zeros((2, 2))))
    assert "a not zero-sum" in res.names()
    v = [x for x in res.violations if x.constraint == "a not zero-sum"][0]
    assert v.magnitude == pytest.approx(0.1)


def test_indefinite_sigma_is_flagged():
    res = validate_params(MarketParams([0.5, 0.5], [0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]]))
    assert "sigma not non-negative definite" in res.names()
    with pytest.raises(ValidationError):
        res.raise_if_invalid()


def test_all_violations_reported_together():
    params = MarketParams([0.7, 0.5], [0.1, 0.0], [[1.0, 0.5], [0.0, -1.0]])
    prof = StrategyProfile([[1.0, 0.0], [0.0, 0.0]])
    names = validate_params(params, prof).names()
    for expected in ("mu sums to 1", "a not zero-sum", "sigma symmetric", "b rows zero-sum"):
        assert expected in names


def test_dimension_mismatch_is_structural():
    with pytest.raises(DimensionError):
        validate_params(MarketParams([0.5, 0.5], [0.0, 0.0, 0.0], np.zeros((2, 2))))
    with pytest.raises(DimensionError):
        validate_params(two_asset_params(0.1), StrategyProfile([[1.0, -0.5, -0.5], [0, 0, 0]]))


def test_single_agent_or_asset_rejected():
    res = validate_params(two_asset_params(0.1), StrategyProfile([[1.0, -1.0]]))
    assert "M >= 2" in res.names()


def test_derived_matrices_two_assets():
    d = derive_matrices(MarketParams([0.5, 0.5], [0, 0], [[0.25, -0.25], [-0.25, 0.25]]))
    np.testing.assert_array_equal(d.M_mat, np.diag([2.0, 2.0]))
    np.testing.assert_array_equal(d.S_mat, [[1.0, -1.0], [-1.0, 1.0]])
    # the 4 sigma2 pattern of the scalar two-asset form
    sig2 = 1.0 / 16
    d2 = derive_matrices(two_asset_params(sig2))
    np.testing.assert_allclose(d2.S_mat, 4 * sig2 * np.array([[1, -1], [-1, 1]]), atol=0)


def test_derived_matrices_zero_cov():
    d = derive_matrices(MarketParams([1 / 3] * 3, [0, 0, 0], np.zeros((3, 3))))
    np.testing.assert_allclose(d.M_mat, np.diag([3.0, 3.0, 3.0]))
    assert not d.S_mat.any()


def test_complete_market_s_matrix():
    mu = np.array([0.2, 0.3, 0.5])
    d = derive_matrices(MarketParams(mu, np.zeros(3), complete_market_sigma(mu)))
    np.testing.assert_allclose(np.diag(d.S_mat), 1 / mu - 1, atol=1e-14)
    off = d.S_mat[~np.eye(3, dtype=bool)]
    np.testing.assert_allclose(off, -1.0, atol=1e-14)
    np.testing.assert_allclose(d.M_mat - d.S_mat, np.ones((3, 3)), atol=1e-14)


def test_params_are_immutable():
    p = two_asset_params(0.1)
    with pytest.raises(ValueError):
        p.mu[0] = 0.3


def test_zero_sum_basis_is_orthonormal():
    for n in range(2, 7):
        B = zero_sum_basis(n)
        assert B.shape == (n, n - 1)
        np.testing.assert_allclose(B.T @ B, np.eye(n - 1), atol=1e-12)
        np.testing.assert_allclose(B.sum(axis=0), 0, atol=1e-12)


def test_lemma_violation_detected():
    # a variance larger than any law on the simplex with this mean allows
    res = validate_params(two_asset_params(0.3))
    assert "M - S non-negative on zero-sum vectors" in res.names()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_lemma_on_random_laws(seed, N):
    rng = np.random.default_rng(seed)
    support, probs = oracles.random_distribution(rng, N)
    mu, sigma = oracles.exact_moments(support, probs)
    Mm = np.diag(1 / mu)
    Sm = sigma / np.outer(mu, mu)
    c = oracles.zero_sum(rng, N)
    assert c @ (Mm - Sm) @ c >= -1e-9
    d = derive_matrices(MarketParams(mu / mu.sum(), np.zeros(N), 0.5 * (sigma + sigma.T)))
    assert d.lemma_margin() >= -1e-9
