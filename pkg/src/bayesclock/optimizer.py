"""Alternating optimization of probe state and measurement.

For a fixed state the optimal observable ``L`` follows from the
anticommutator equation; for a fixed ``L`` the posterior variance is
``V + <psi|M|psi>`` with ``M`` the prior-averaged dual channel applied to
``L^2 - 2 omega L``, so the best state is the lowest eigenvector of ``M``.
Alternating the two steps never increases the cost.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .estimator import (RELATIVE_RANK_CUTOFF, average_state, bayes_variance, qfi,
                        rho_prime_gaussian, solve_sld)
from .hilbert import SymmetricState, eigh, make_state, to_density

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-12
WARM_START_NOISE = 1e-3


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 5000
    cost_tolerance: float = 1e-10
    seed: int = 0
    restarts: int = 4
    anderson_depth: int = 5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.cost_tolerance > 0:
            raise ValueError(f"cost_tolerance must be > 0, got {self.cost_tolerance}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.anderson_depth < 0:
            raise ValueError(f"anderson_depth must be >= 0, got {self.anderson_depth}")


@dataclass
class OptimizationResult:
    state: SymmetricState
    variance: float
    iterations: int
    converged: bool
    cost_history: np.ndarray = field(repr=False)


def random_state(n_atoms: int, seed=0) -> SymmetricState:
    """Haar-random pure state on the symmetric subspace."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal(n_atoms + 1) + 1j * rng.standard_normal(n_atoms + 1)
    return SymmetricState.from_vector(z)


def state_update_operator(L, t: float, effective_variance: float, k1_weight: float) -> np.ndarray:
    """Prior average of ``e^{iH w t} (L^2 - 2 w L) e^{-iH w t}``.

    Entrywise ``M[n, m] = g(n-m) [(L^2)[n, m] - 2i (n-m) t k1 L[n, m]]`` with
    ``g(k) = exp(-k^2 t^2 effective_variance / 2)``.
    """
    L = np.asarray(L, dtype=complex)
    dim = L.shape[0]
    k = np.subtract.outer(np.arange(dim), np.arange(dim))
    g = np.exp(-0.5 * k**2 * t**2 * effective_variance)
    M = g * (L @ L - 2j * k * t * k1_weight * L)
    return 0.5 * (M + M.conj().T)


def _lowest_eigenvector(M, previous):
    vals, vecs = np.linalg.eigh(M)
    scale = max(1.0, abs(vals[0]), abs(vals[-1]))
    degenerate = np.count_nonzero(vals - vals[0] < DEGENERACY_GAP * scale)
    if degenerate == 1:
        v = vecs[:, 0]
    else:
        # project the previous state onto the degenerate eigenspace
        sub = vecs[:, :degenerate]
        v = sub @ (sub.conj().T @ previous)
        if np.linalg.norm(v) < 1e-8:
            v = sub[:, 0]
    ov = np.vdot(previous, v)
    if abs(ov) > 0:
        v = v * (abs(ov) / ov)
    return v / np.linalg.norm(v)


def _estimator(amps, t, prior_variance, effective_variance, k1_weight):
    rho_bar = average_state(np.outer(amps, amps.conj()), t, effective_variance)
    rho_p = rho_prime_gaussian(rho_bar, None, t, k1_weight)
    L = solve_sld(rho_bar, rho_p)
    return L, bayes_variance(prior_variance, rho_bar, rho_p, L)


def _defaults(prior_variance, effective_variance, k1_weight):
    v_eff = prior_variance if effective_variance is None else effective_variance
    k1 = prior_variance if k1_weight is None else k1_weight
    return v_eff, k1


def iterate_once(state: SymmetricState, t: float, prior_variance: float,
                 effective_variance: float | None = None, k1_weight: float | None = None):
    """One measurement step followed by one state step.

    Returns
    -------
    L : ndarray
        Optimal observable for the input state.
    new_state : SymmetricState
    variance : float
        Posterior variance reached by ``new_state`` with its own optimal
        observable.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    v_eff, k1 = _defaults(prior_variance, effective_variance, k1_weight)
    L, _ = _estimator(state.amplitudes, t, prior_variance, v_eff, k1)
    M = state_update_operator(L, t, v_eff, k1)
    amps = _lowest_eigenvector(M, state.amplitudes)
    _, var = _estimator(amps, t, prior_variance, v_eff, k1)
    return L, SymmetricState.from_vector(amps), var


class _RealProblem:
    """Same iteration in the gauge where all amplitudes are real and >= 0.

    ``H`` is diagonal, so phases ``c_n -> e^{i phi_n} c_n`` leave the cost
    unchanged.  With real amplitudes ``rho_bar`` and ``M`` are real symmetric
    and ``L = iX`` with ``X`` real antisymmetric, so every eigenproblem is
    real.
    """

    def __init__(self, dim, t, prior_variance, v_eff, k1):
        self.k = np.subtract.outer(np.arange(dim), np.arange(dim)).astype(float)
        self.g = np.exp(-0.5 * self.k**2 * t**2 * v_eff)
        self.t, self.prior, self.k1 = t, prior_variance, k1

    def estimator(self, a):
        """Return ``X`` (with ``L = iX``) and the posterior variance for amplitudes ``a``."""
        rho = self.g * np.outer(a, a)
        lam, vecs = np.linalg.eigh(rho)
        denom = lam[:, None] + lam[None, :]
        keep = denom > RELATIVE_RANK_CUTOFF * lam[-1]
        # rho' = i t k1 [rho, H] = i A with A[n, m] = -t k1 (n - m) rho[n, m]
        a_eig = vecs.T @ (-self.t * self.k1 * self.k * rho) @ vecs
        x_eig = np.zeros_like(a_eig)
        x_eig[keep] = 2 * a_eig[keep] / denom[keep]
        X = vecs @ x_eig @ vecs.T
        X = 0.5 * (X - X.T)
        gain = np.sum(rho * (X @ X.T))
        return X, self.prior - gain

    def update_operator(self, X):
        M = self.g * (-(X @ X) + 2 * self.t * self.k1 * self.k * X)
        return 0.5 * (M + M.T)


def _descend(amps, t, prior_variance, v_eff, k1, config):
    """Iterate to convergence; returns amplitudes, cost history, converged flag.

    With ``config.anderson_depth > 0`` each plain step is followed by an
    Anderson-mixed candidate built from the last few iterates; the candidate
    is kept only if it lowers the cost, so descent stays monotone.
    """
    prob = _RealProblem(len(amps), t, prior_variance, v_eff, k1)
    a = np.abs(amps)
    a /= np.linalg.norm(a)
    X, cost = prob.estimator(a)
    history = [cost]
    resid, images = [], []
    small_steps = 0
    converged = False
    for _ in range(config.max_iterations):
        b = np.abs(_lowest_eigenvector(prob.update_operator(X), a))
        Xb, cost_b = prob.estimator(b)
        if config.anderson_depth:
            resid.append(b - a)
            images.append(b)
            del resid[:-config.anderson_depth - 1], images[:-config.anderson_depth - 1]
            if len(resid) > 1:
                dF = np.diff(np.array(resid), axis=0).T
                dG = np.diff(np.array(images), axis=0).T
                coef = np.linalg.lstsq(dF, resid[-1], rcond=None)[0]
                e = np.abs(b - dG @ coef)
                if np.linalg.norm(e) > 0:
                    e /= np.linalg.norm(e)
                    Xe, cost_e = prob.estimator(e)
                    if cost_e < cost_b:
                        b, Xb, cost_b = e, Xe, cost_e
                    else:
                        resid, images = resid[-1:], images[-1:]
        history.append(cost_b)
        small_steps = small_steps + 1 if cost - cost_b < config.cost_tolerance else 0
        a, X, cost = b, Xb, cost_b
        if small_steps >= 2:
            converged = True
            break
    return a, np.array(history), converged


def perturb(state: SymmetricState, rng, scale: float = WARM_START_NOISE) -> SymmetricState:
    """Add small complex Gaussian noise; escapes support-restricted fixed points like GHZ."""
    z = rng.standard_normal(state.dim) + 1j * rng.standard_normal(state.dim)
    return SymmetricState.from_vector(state.amplitudes + scale * z / np.sqrt(2 * state.dim))


def optimize_state(n_atoms: int, t: float, prior_variance: float,
                   effective_variance: float | None = None, k1_weight: float | None = None,
                   config: OptimizerConfig | None = None,
                   initial_states=()) -> OptimizationResult:
    """Best state over random restarts plus any supplied starting states.

    ``effective_variance`` and ``k1_weight`` default to ``prior_variance``,
    which is the decoherence-free Gaussian-prior problem.  Starting states
    are used as given; wrap them with :func:`perturb` for a warm start that
    can leave symmetric fixed points.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    config = config or OptimizerConfig()
    v_eff, k1 = _defaults(prior_variance, effective_variance, k1_weight)
    rng = np.random.default_rng(config.seed)
    starts = [s.amplitudes for s in initial_states]
    starts += [random_state(n_atoms, rng).amplitudes for _ in range(config.restarts)]
    best = None
    for amps0 in starts:
        amps, history, converged = _descend(amps0, t, prior_variance, v_eff, k1, config)
        if best is None or history[-1] < best.variance:
            best = OptimizationResult(
                state=SymmetricState.from_vector(amps),
                variance=float(history[-1]),
                iterations=len(history) - 1,
                converged=converged,
                cost_history=history,
            )
    if not best.converged:
        logger.warning("optimizer hit max_iterations=%d at N=%d, t=%g",
                       config.max_iterations, n_atoms, t)
    return best


def r_value(state: SymmetricState, tau: float) -> float:
    """Variance reduction factor of a fixed state with its optimal measurement.

    Natural units: unit prior variance and ``t = tau``.
    """
    rho_bar = average_state(to_density(state), tau, 1.0)
    return 1.0 - qfi(rho_bar, None, tau)


def r_curve(n_atoms: int, tau_grid, family: str = "optimal",
            config: OptimizerConfig | None = None):
    """Variance reduction factor ``R(tau)`` for one state family.

    Fixed families keep the state and optimize only the measurement.  The
    optimal family re-optimizes the state at each ``tau``, warm-started from
    the previous grid point in addition to the random restarts.

    Returns
    -------
    taus, R : ndarray
    states : list of SymmetricState
    """
    taus = np.asarray(tau_grid, dtype=float)
    if np.any(taus <= 0):
        raise ValueError("tau values must be > 0")
    if family != "optimal":
        state = make_state(family, n_atoms)
        return taus, np.array([r_value(state, tau) for tau in taus]), [state] * len(taus)
    config = config or OptimizerConfig()
    rng = np.random.default_rng(config.seed + 7919)
    values, states = [], []
    previous = None
    for tau in taus:
        warm = [] if previous is None else [perturb(previous, rng)]
        res = optimize_state(n_atoms, tau, 1.0, config=config, initial_states=warm)
        values.append(res.variance)
        states.append(res.state)
        previous = res.state
    return taus, np.array(values), states
