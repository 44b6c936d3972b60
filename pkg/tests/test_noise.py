import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayesclock.noise import (RAMP_SERIES_THRESHOLD, REFERENCE_OU, REFERENCE_WHITE,
                              SERIES_THRESHOLD, OUParams,
                              WhiteNoiseParams, _decay_ratio, _ramp_ratio,
                              effective_prior_variance, k1_kernel, ou_covariance, ou_k1,
                              ou_k1_covariance, ou_k2, ou_variance, read_noise_config,
                              sample_ou_path, white_k2)

# Reference values from 30-digit quadrature of the defining integrals of the
# two-point function (alpha = 1, gamma = 0.2, initial variance 0.167).
REFERENCE_TABLE = {
    # t: (variance, K1 time average, K1 undecayed-offset form, K2)
    0.2: (0.2310440834599324, 0.1957218643464791, 0.2021407935887847, 0.1863546202182991),
    1.0: (0.4416234016523125, 0.2882156397787340, 0.3156525205782631, 0.2522585609048489),
    5.0: (0.8872657090639016, 0.4384112752688446, 0.5051405342180972, 0.4029117403984092),
}

params = st.builds(OUParams, alpha=st.floats(0, 5), gamma=st.floats(0.01, 5),
                   initial_variance=st.floats(0, 5))


@pytest.mark.parametrize("t", sorted(REFERENCE_TABLE))
def test_kernels_against_reference_table(t):
    var, k1_avg, k1_und, k2 = REFERENCE_TABLE[t]
    p = REFERENCE_OU
    assert ou_variance(p, t) == pytest.approx(var, rel=1e-13)
    assert ou_k1_covariance(p, t) == pytest.approx(k1_avg, rel=1e-13)
    assert ou_k1(p, t) == pytest.approx(k1_und, rel=1e-13)
    assert ou_k2(p, t) == pytest.approx(k2, rel=1e-13)


def test_k1_forms_differ_by_offset_term():
    p, t = REFERENCE_OU, 2.0
    x = p.gamma * t
    gap = p.initial_variance * (1 - np.exp(-x)) ** 2 / x
    assert ou_k1(p, t) - ou_k1_covariance(p, t) == pytest.approx(gap, rel=1e-12)
    assert k1_kernel(p, t) == ou_k1(p, t)
    assert k1_kernel(p, t, "covariance") == ou_k1_covariance(p, t)
    with pytest.raises(ValueError, match="K1 form"):
        k1_kernel(p, t, "other")


@pytest.mark.parametrize("t", [0.3, 2.0, 7.0])
def test_kernels_are_time_averages_of_covariance(t):
    # trapezoid on a fine grid; independent of the closed forms
    p = REFERENCE_OU
    s = np.linspace(0, t, 2001)
    k1 = np.trapezoid(ou_covariance(p, s, t), s) / t
    S1, S2 = np.meshgrid(s, s)
    k2 = np.trapezoid(np.trapezoid(ou_covariance(p, S1, S2), s), s) / t**2
    assert ou_k1_covariance(p, t) == pytest.approx(k1, rel=1e-6)
    assert ou_k2(p, t) == pytest.approx(k2, rel=1e-6)
    assert ou_variance(p, t) == pytest.approx(float(ou_covariance(p, t, t)), rel=1e-14)


def test_variance_limits():
    p = REFERENCE_OU
    assert ou_variance(p, 0.0) == p.initial_variance
    assert ou_variance(p, 1e6 / p.gamma) == pytest.approx(p.alpha, abs=1e-12)


def test_special_cases():
    p = OUParams(alpha=0.0, gamma=0.3, initial_variance=0.5)
    t = 1.7
    x = 0.3 * t
    assert ou_k1(p, t) == pytest.approx(0.5 * (1 - np.exp(-x)) / x, rel=1e-14)
    q = OUParams(alpha=0.8, gamma=0.3, initial_variance=0.8)
    assert ou_k2(q, t) == pytest.approx(2 * 0.8 * (x + np.exp(-x) - 1) / x**2, rel=1e-13)


@pytest.mark.parametrize("fn", [ou_variance, ou_k1, ou_k1_covariance, ou_k2])
def test_zero_time_limit(fn):
    p = REFERENCE_OU
    assert fn(p, 0.0) == pytest.approx(p.initial_variance, rel=1e-15)
    assert fn(p, 1e-8 / p.gamma) == pytest.approx(p.initial_variance, rel=1e-7)


@pytest.mark.parametrize("fn, switch", [(_decay_ratio, SERIES_THRESHOLD),
                                        (_ramp_ratio, RAMP_SERIES_THRESHOLD)])
def test_series_branch_continuous(fn, switch):
    below = fn(switch * (1 - 1e-9))
    above = fn(switch * (1 + 1e-9))
    assert below == pytest.approx(above, rel=1e-10)


@pytest.mark.parametrize("x", [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 5e-3, 2e-2, 0.3])
def test_ratios_accurate_at_small_arguments(x):
    # 30-digit references for (1 - e^-x)/x and (x + e^-x - 1)/x^2
    xf = Fraction(x)
    exp_neg = sum(Fraction((-1) ** k) * xf**k / Fraction(math.factorial(k)) for k in range(40))
    assert _decay_ratio(x) == pytest.approx(float((1 - exp_neg) / xf), rel=1e-14)
    assert _ramp_ratio(x) == pytest.approx(float((xf + exp_neg - 1) / xf**2), rel=1e-13)


@given(p=params, t=st.floats(1e-3, 50))
def test_k2_bounded_by_pointwise_variance(p, t):
    s = np.linspace(0, t, 200)
    bound = max(ou_variance(p, x) for x in s)
    assert 0 <= ou_k2(p, t) <= bound * (1 + 1e-9) + 1e-15


@given(p=params, t=st.floats(0, 100))
def test_variance_between_endpoints(p, t):
    v = ou_variance(p, t)
    lo, hi = sorted((p.alpha, p.initial_variance))
    assert lo - 1e-12 <= v <= hi + 1e-12


def test_variance_diffusive_start():
    p = REFERENCE_OU
    ts = np.linspace(0.001, 0.01, 10) / p.gamma
    v = np.array([ou_variance(p, t) for t in ts])
    assert np.all(np.diff(v) > 0)
    approx = p.initial_variance + 2 * p.gamma * ts * (p.alpha - p.initial_variance)
    np.testing.assert_allclose(v, approx, rtol=1e-2)


def test_white_noise_kernel():
    assert white_k2(REFERENCE_WHITE, 1.0) == pytest.approx(1e-3)
    assert white_k2(REFERENCE_WHITE, 0.1) == pytest.approx(1e-2)
    assert white_k2(WhiteNoiseParams(0.0), 2.0) == 0.0
    with pytest.raises(ValueError, match="diverges"):
        white_k2(REFERENCE_WHITE, 0.0)


def test_effective_prior_variance():
    t = 1.0
    assert effective_prior_variance(REFERENCE_OU, WhiteNoiseParams(0), t) == ou_k2(REFERENCE_OU, t)
    quiet = OUParams(0.0, 0.2, 0.0)
    assert effective_prior_variance(quiet, REFERENCE_WHITE, 0.5) == pytest.approx(2e-3)
    assert effective_prior_variance(REFERENCE_OU, REFERENCE_WHITE, t) == pytest.approx(
        REFERENCE_TABLE[1.0][3] + 1e-3, rel=1e-13)
    with pytest.raises(ValueError):
        effective_prior_variance(REFERENCE_OU, REFERENCE_WHITE, 0.0)


def test_parameter_validation():
    with pytest.raises(ValueError, match="gamma"):
        OUParams(1.0, 0.0, 0.1)
    with pytest.raises(ValueError, match="alpha"):
        OUParams(-1.0, 0.1, 0.1)
    with pytest.raises(ValueError, match="initial_variance"):
        OUParams(1.0, 0.1, -0.1)
    with pytest.raises(ValueError, match="beta"):
        WhiteNoiseParams(-1e-3)


# path sampling

def test_silent_path_is_zero():
    _, omega = sample_ou_path(OUParams(0.0, 0.2, 0.0), 1.0, 0.01)
    assert np.all(omega == 0)


def test_path_deterministic_per_seed():
    a = sample_ou_path(REFERENCE_OU, 2.0, 0.01, seed=7)[1]
    b = sample_ou_path(REFERENCE_OU, 2.0, 0.01, seed=7)[1]
    c = sample_ou_path(REFERENCE_OU, 2.0, 0.01, seed=8)[1]
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_path_grid():
    times, omega = sample_ou_path(REFERENCE_OU, 1.05, 0.1)
    assert times[0] == 0 and times[-1] == 1.05 and len(times) == len(omega) == 12


def test_path_rejects_bad_step():
    with pytest.raises(ValueError, match="dt"):
        sample_ou_path(REFERENCE_OU, 1.0, 0.0)
    with pytest.raises(ValueError, match="t_end"):
        sample_ou_path(REFERENCE_OU, 0.01, 0.1)


def test_path_endpoint_variance():
    n = 100_000
    _, omega = sample_ou_path(REFERENCE_OU, 3.0, 0.05, seed=3, n_paths=n)
    x2 = omega[:, -1] ** 2
    se = x2.std(ddof=1) / np.sqrt(n)
    assert abs(x2.mean() - ou_variance(REFERENCE_OU, 3.0)) <= 3 * se


def test_path_two_point_covariance():
    n = 100_000
    times, omega = sample_ou_path(REFERENCE_OU, 4.0, 0.5, seed=4, n_paths=n)
    for i, j in [(2, 6), (0, 8), (4, 4)]:
        prod = omega[:, i] * omega[:, j]
        se = prod.std(ddof=1) / np.sqrt(n)
        assert abs(prod.mean() - ou_covariance(REFERENCE_OU, times[i], times[j])) <= 3 * se


# config files

def test_read_noise_config(tmp_path):
    f = tmp_path / "noise.cfg"
    f.write_text("# Fig scenario\nalpha = 1\ngamma=0.2  # Hz\n\nbeta = 1e-3\ninitial_variance = 0.167\n")
    assert read_noise_config(f) == {"alpha": 1.0, "gamma": 0.2, "beta": 1e-3, "initial_variance": 0.167}


@pytest.mark.parametrize("text, match", [
    ("alpha 1\n", "key=value"),
    ("delta = 1\n", "unknown key 'delta'"),
    ("gamma = fast\n", "gamma is not a number"),
])
def test_read_noise_config_errors(tmp_path, text, match):
    f = tmp_path / "bad.cfg"
    f.write_text(text)
    with pytest.raises(ValueError, match=match):
        read_noise_config(f)
