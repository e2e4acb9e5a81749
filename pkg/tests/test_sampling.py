import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from aesmc.sampling import (
    MAX_POISSON_RATE,
    NoncentralChiSqParams,
    RngStream,
    sample_gamma,
    sample_noncentral_chisq,
    sample_poisson,
    sample_standard_normal,
    sample_uniform,
)
from conftest import ncx2_moment_se

N_BIG = 1_000_000


def test_stream_key_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)
    s = RngStream(2**64 - 1, 5)
    assert s.seed == 2**64 - 1 and s.stream_id == 5


def test_same_key_same_bits():
    a = sample_standard_normal(RngStream(1, 0), size=64)
    b = sample_standard_normal(RngStream(1, 0), size=64)
    assert np.array_equal(a, b)
    # single scalar draw too
    assert sample_standard_normal(RngStream(1, 0)) == sample_standard_normal(RngStream(1, 0))


def test_distinct_streams_uncorrelated():
    n = 100_000
    a = sample_standard_normal(RngStream(7, 0), size=n)
    b = sample_standard_normal(RngStream(7, 1), size=n)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4.0 / np.sqrt(n)


def test_array_draw_equals_scalar_sequence():
    arr = sample_standard_normal(RngStream(3, 9), size=8)
    stream = RngStream(3, 9)
    seq = np.array([sample_standard_normal(stream) for _ in range(8)])
    assert np.array_equal(arr, seq)


def test_normal_moments():
    x = sample_standard_normal(RngStream(11, 0), size=N_BIG)
    assert abs(x.mean()) < 4e-3
    assert abs(x.var(ddof=1) - 1.0) < 6e-3


def test_uniform_support():
    u = sample_uniform(RngStream(5, 0), size=100_000)
    assert u.min() >= 0.0 and u.max() < 1.0


def test_gamma_mean_shape2_scale3():
    x = sample_gamma(RngStream(21, 0), 2.0, 3.0, size=N_BIG)
    assert abs(x.mean() - 6.0) < 0.013


def test_gamma_mean_small_shape():
    x = sample_gamma(RngStream(22, 0), 0.5, 2.0, size=N_BIG)
    assert abs(x.mean() - 1.0) < 0.005


def test_gamma_small_shape_support_and_variance():
    x = sample_gamma(RngStream(23, 0), 0.5262, 2.0, size=N_BIG)
    assert x.min() >= 0.0
    # boost path must still produce the right second moment
    var = 0.5262 * 4.0
    se = np.sqrt((3.0 / 0.5262 + 2.0)) * var / np.sqrt(N_BIG)  # excess kurtosis 6/shape
    assert abs(x.var(ddof=1) - var) < 4 * se


def test_gamma_mixed_shape_vector():
    shapes = np.array([0.3, 0.9, 1.0, 2.5, 17.0])
    x = sample_gamma(RngStream(24, 0), shapes, 1.0)
    assert x.shape == shapes.shape
    assert np.all(x >= 0.0)


@given(shape=st.floats(max_value=0.0, allow_nan=False), scale=st.floats(min_value=0.1, max_value=10))
def test_gamma_rejects_nonpositive_shape(shape, scale):
    with pytest.raises(ValueError):
        sample_gamma(RngStream(0), shape, scale)


def test_gamma_rejects_bad_scale():
    with pytest.raises(ValueError):
        sample_gamma(RngStream(0), 1.0, 0.0)
    with pytest.raises(ValueError):
        sample_gamma(RngStream(0), 1.0, np.inf)


def test_poisson_zero_rate_deterministic():
    assert sample_poisson(RngStream(1), 0.0) == 0
    assert np.all(sample_poisson(RngStream(1), 0.0, size=100) == 0)


def test_poisson_mean():
    x = sample_poisson(RngStream(31, 0), 4.0, size=N_BIG)
    assert abs(x.mean() - 4.0) < 0.006


def test_poisson_variance_large_rate():
    x = sample_poisson(RngStream(32, 0), 1000.0, size=N_BIG)
    assert abs(x.var(ddof=1) - 1000.0) < 5.0


@pytest.mark.parametrize("rate", [-1.0, np.nan, np.inf])
def test_poisson_rejects_bad_rate(rate):
    with pytest.raises(ValueError):
        sample_poisson(RngStream(0), rate)


def test_poisson_rejects_overflow_rate():
    with pytest.raises(ValueError):
        sample_poisson(RngStream(0), MAX_POISSON_RATE * 2)


def test_ncchisq_params_validation():
    with pytest.raises(ValueError):
        NoncentralChiSqParams(0.0, 1.0)
    with pytest.raises(ValueError):
        NoncentralChiSqParams(1.0, -0.1)
    with pytest.raises(ValueError):
        NoncentralChiSqParams(np.nan, 0.0)
    NoncentralChiSqParams(0.5, 0.0)


def test_ncchisq_lambda_overflow_guard():
    with pytest.raises(ValueError):
        sample_noncentral_chisq(RngStream(0), NoncentralChiSqParams(1.0, 3e9))


def test_ncchisq_central_reduction_mean():
    x = sample_noncentral_chisq(RngStream(41, 0), NoncentralChiSqParams(3.9506, 0.0), size=N_BIG)
    assert abs(x.mean() - 3.9506) < 0.01


def test_ncchisq_mean_identity():
    x = sample_noncentral_chisq(RngStream(42, 0), NoncentralChiSqParams(1.0525, 2.5), size=N_BIG)
    assert abs(x.mean() - 3.5525) < 0.01


def test_ncchisq_variance_identity():
    x = sample_noncentral_chisq(RngStream(43, 0), NoncentralChiSqParams(1.0525, 2.5), size=N_BIG)
    _, se_var = ncx2_moment_se(1.0525, 2.5, N_BIG)
    assert abs(x.var(ddof=1) - 12.105) < 3 * se_var


def test_ncchisq_nonnegative_support():
    x = sample_noncentral_chisq(RngStream(44, 0), NoncentralChiSqParams(1.0525, 2.5), size=N_BIG)
    assert x.min() >= 0.0


def test_ncchisq_vector_noncentrality():
    lam = np.linspace(0.0, 10.0, 1000)
    x = sample_noncentral_chisq(RngStream(45, 0), NoncentralChiSqParams(0.7, lam))
    assert x.shape == lam.shape
    assert np.all(x >= 0.0)


def test_ncchisq_lambda0_matches_gamma_ks():
    n = 100_000
    x = sample_noncentral_chisq(RngStream(46, 0), NoncentralChiSqParams(1.0525, 0.0), size=n)
    y = sample_gamma(RngStream(46, 1), 1.0525 / 2.0, 2.0, size=n)
    assert stats.ks_2samp(x, y).pvalue > 0.01


@settings(max_examples=25, deadline=None)
@given(dof=st.floats(min_value=0.05, max_value=50), lam=st.floats(min_value=0.0, max_value=100))
def test_ncchisq_always_nonnegative(dof, lam):
    x = sample_noncentral_chisq(RngStream(47, 0), NoncentralChiSqParams(dof, lam), size=32)
    assert np.all(x >= 0.0)
