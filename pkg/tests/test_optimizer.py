import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from bayesclock.estimator import average_state, optimal_estimator, rho_prime_gaussian, sld_residual
from bayesclock.hilbert import SymmetricState, make_ghz, make_state, to_density
from bayesclock.optimizer import (OptimizerConfig, _RealProblem, _estimator, iterate_once,
                                  optimize_state, perturb, r_curve, r_value, random_state,
                                  state_update_operator)
from conftest import random_hermitian

seeds = st.integers(0, 2**32 - 1)


def ghz_ratio(n, tau):
    x = (n * tau) ** 2
    return 1 - x * np.exp(-x)


def cost(state, t, prior=1.0, v_eff=None, k1=None):
    return optimal_estimator(to_density(state), t, prior, v_eff, k1)[1]


# random states

def test_random_state_contract():
    a, b = random_state(4, 1), random_state(4, 2)
    assert abs(np.linalg.norm(a.amplitudes) - 1) < 1e-12
    np.testing.assert_array_equal(a.amplitudes, random_state(4, 1).amplitudes)
    assert a.overlap(b) < 1 - 1e-9


# dual channel

def test_update_operator_zero():
    assert np.all(state_update_operator(np.zeros((4, 4)), 0.5, 1.0, 1.0) == 0)


@given(seed=seeds, n=st.integers(1, 10))
def test_update_operator_hermitian(seed, n):
    L = random_hermitian(np.random.default_rng(seed), n + 1)
    M = state_update_operator(L, 0.7, 0.9, 0.4)
    assert np.max(np.abs(M - M.conj().T)) <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_update_operator_matches_quadrature(seed):
    # Gauss-Hermite average of exp(iHwt) (L^2 - 2 w L) exp(-iHwt) over N(0, v)
    L = random_hermitian(np.random.default_rng(seed), 5)
    t, v = 0.6, 0.8
    x, w = np.polynomial.hermite.hermgauss(100)
    n = np.arange(5)
    M_ref = np.zeros((5, 5), dtype=complex)
    for om, wt in zip(np.sqrt(2 * v) * x, w / np.sqrt(np.pi)):
        U = np.diag(np.exp(1j * n * om * t))
        M_ref += wt * U @ (L @ L - 2 * om * L) @ U.conj().T
    M = state_update_operator(L, t, v, v)
    assert np.max(np.abs(M - M_ref)) < 1e-12
    # the lowest eigenvector is the same state
    v1, v2 = np.linalg.eigh(M)[1][:, 0], np.linalg.eigh(M_ref)[1][:, 0]
    assert abs(abs(np.vdot(v1, v2)) - 1) < 1e-10


@given(seed=seeds, n=st.integers(1, 8), t=st.floats(0.05, 2.0),
       v_eff=st.floats(0.1, 2.0), corr=st.floats(0.0, 1.0))
def test_expected_cost_is_prior_plus_quadratic_form(seed, n, t, v_eff, corr):
    # for the optimal L of psi: prior + <psi|M|psi> equals the posterior variance;
    # a joint Gaussian needs k1^2 <= prior * v_eff
    prior = 1.0
    k1 = corr * np.sqrt(prior * v_eff)
    psi = random_state(n, np.random.default_rng(seed))
    L, var = optimal_estimator(to_density(psi), t, prior, v_eff, k1)
    M = state_update_operator(L, t, v_eff, k1)
    assert abs(prior + np.vdot(psi.amplitudes, M @ psi.amplitudes).real - var) <= 1e-10


# real-gauge kernel agrees with the complex iteration

@given(seed=seeds, n=st.integers(1, 12), t=st.floats(0.02, 2.0))
def test_real_gauge_matches_complex_path(seed, n, t):
    psi = random_state(n, np.random.default_rng(seed))
    a = np.abs(psi.amplitudes)
    prob = _RealProblem(n + 1, t, 1.0, 1.0, 1.0)
    X, c_real = prob.estimator(a)
    L, c_cplx = _estimator(a.astype(complex), t, 1.0, 1.0, 1.0)
    assert abs(c_real - c_cplx) <= 1e-11
    assert abs(c_real - cost(psi, t)) <= 1e-11  # gauge invariance
    # L is only well conditioned on the support of rho_bar, so compare residuals
    rho_bar = average_state(np.outer(a, a), t, 1.0)
    rho_p = rho_prime_gaussian(rho_bar, None, t, 1.0)
    assert sld_residual(1j * X, rho_bar, rho_p) <= 1e-9
    M_real = prob.update_operator(X)
    M_cplx = state_update_operator(1j * X, t, 1.0, 1.0)
    np.testing.assert_allclose(M_real, M_cplx.real, atol=1e-12)
    assert np.max(np.abs(M_cplx.imag)) <= 1e-12


# single step

@pytest.mark.parametrize("n", [2, 4, 8])
def test_ghz_is_fixed_point_at_short_times(n):
    tau = 0.05 / n
    ghz = make_ghz(n)
    _, new, var = iterate_once(ghz, tau, 1.0)
    assert new.overlap(ghz) >= 1 - 1e-6
    assert abs(var - ghz_ratio(n, tau)) <= 1e-9


def test_iteration_monotone_from_random_start():
    state = random_state(3, 11)
    costs = [cost(state, 0.4)]
    for _ in range(50):
        _, state, var = iterate_once(state, 0.4, 1.0)
        costs.append(var)
    assert np.all(np.diff(costs) <= 1e-10)
    assert costs[-1] < costs[0]


def test_iteration_defaults_are_decoherence_free():
    s = random_state(4, 3)
    a = iterate_once(s, 0.3, 0.7)
    b = iterate_once(s, 0.3, 0.7, effective_variance=0.7, k1_weight=0.7)
    np.testing.assert_array_equal(a[1].amplitudes, b[1].amplitudes)
    assert a[2] == b[2]


def test_iteration_rejects_zero_time():
    with pytest.raises(ValueError, match="t must"):
        iterate_once(make_ghz(2), 0.0, 1.0)


# full optimization

@pytest.mark.parametrize("tau", [0.05, 0.3, 1.0, 2.5])
def test_single_atom_closed_form(tau):
    res = optimize_state(1, tau, 1.0)
    assert abs(res.variance - ghz_ratio(1, tau)) <= 1e-8


def test_short_time_optimum_is_ghz():
    res = optimize_state(5, 0.02, 1.0)
    assert res.variance == pytest.approx(ghz_ratio(5, 0.02), rel=1e-6)


def test_optimum_dominates_families():
    res = optimize_state(10, 0.5, 1.0)
    for fam in ("ghz", "product", "sine"):
        assert res.variance <= r_value(make_state(fam, 10), 0.5) + 1e-9


@pytest.mark.parametrize("n, tau", [(4, 0.3), (6, 0.15), (8, 0.6)])
def test_optimum_matches_gradient_reference(n, tau):
    # L-BFGS on the real amplitudes with the analytic gradient 2 (M a - <M> a)
    prob = _RealProblem(n + 1, tau, 1.0, 1.0, 1.0)

    def f(x):
        a = x / np.linalg.norm(x)
        X, c = prob.estimator(a)
        M = prob.update_operator(X)
        return c, 2 * (M @ a - (a @ M @ a) * a) / np.linalg.norm(x)

    best = min(minimize(f, np.abs(random_state(n, s).amplitudes), jac=True, method="L-BFGS-B",
                        options={"gtol": 1e-12, "ftol": 1e-15}).fun for s in range(6))
    res = optimize_state(n, tau, 1.0)
    assert res.variance <= best + 1e-8


def test_result_bookkeeping():
    res = optimize_state(6, 0.4, 1.0, config=OptimizerConfig(seed=5))
    assert res.converged
    assert res.variance == res.cost_history[-1]
    assert np.all(np.diff(res.cost_history) <= 1e-12)
    assert res.variance == pytest.approx(cost(res.state, 0.4), abs=1e-12)


def test_non_convergence_is_reported_not_raised():
    res = optimize_state(10, 0.5, 1.0, config=OptimizerConfig(max_iterations=1, restarts=1))
    assert not res.converged
    assert res.iterations == 1


def test_decoherence_problem_uses_effective_prior():
    # optimizing the spread-out problem equals optimizing F of the state spread by v_eff
    prior, v_eff, k1, t = 0.4, 0.9, 0.3, 0.7
    res = optimize_state(5, t, prior, v_eff, k1)
    assert res.variance == pytest.approx(cost(res.state, t, prior, v_eff, k1), abs=1e-12)
    assert res.variance < prior


def test_config_validation():
    with pytest.raises(ValueError, match="max_iterations"):
        OptimizerConfig(max_iterations=0)
    with pytest.raises(ValueError, match="cost_tolerance"):
        OptimizerConfig(cost_tolerance=0)
    with pytest.raises(ValueError, match="restarts"):
        OptimizerConfig(restarts=0)


@given(seed=seeds, n=st.integers(1, 10), tau=st.floats(0.02, 2.0), phase=st.floats(0, 2 * np.pi))
def test_cost_invariant_under_global_phase(seed, n, tau, phase):
    psi = random_state(n, np.random.default_rng(seed))
    rotated = SymmetricState.from_vector(np.exp(1j * phase) * psi.amplitudes)
    assert abs(cost(psi, tau) - cost(rotated, tau)) <= 1e-12


@given(seed=seeds, n=st.integers(1, 10), tau=st.floats(0.02, 2.0))
def test_cost_invariant_under_reflection(seed, n, tau):
    psi = random_state(n, np.random.default_rng(seed))
    mirrored = SymmetricState.from_vector(psi.amplitudes[::-1])
    assert abs(cost(psi, tau) - cost(mirrored, tau)) <= 1e-10


def test_warm_start_perturbation_is_small():
    s = make_ghz(6)
    p = perturb(s, np.random.default_rng(0))
    assert 1 - 1e-5 < p.overlap(s) < 1


# reduction curves

def test_ghz_curve_closed_form():
    taus, R, _ = r_curve(7, np.geomspace(1e-3, 2, 40), "ghz")
    np.testing.assert_allclose(R, ghz_ratio(7, taus), atol=1e-8)


def test_optimal_curve_dominates_and_turns_up():
    grid = np.geomspace(0.02, 2.0, 25)
    _, R_opt, _ = r_curve(6, grid, "optimal", OptimizerConfig(restarts=2))
    for fam in ("ghz", "product"):
        _, R_fam, _ = r_curve(6, grid, fam)
        assert np.all(R_opt <= R_fam + 1e-9)
    assert R_opt[-1] > R_opt.min()
    assert np.all((R_opt > 0) & (R_opt <= 1))


@pytest.mark.parametrize("family", ["ghz", "product", "sine"])
def test_fixed_family_curve_endpoints(family):
    n = 8
    _, R, _ = r_curve(n, [1e-3 / n, 50.0], family)
    assert R[0] > 1 - 1e-5
    assert R[1] > 1 - 1e-5


def test_curve_rejects_nonpositive_tau():
    with pytest.raises(ValueError):
        r_curve(3, [0.0, 1.0], "ghz")
