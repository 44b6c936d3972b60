"""Bayesian estimation of a frequency encoded as ``exp(-i H omega t)``.

Conventions: ``omega`` in rad/s, ``t`` in s, variances in (rad/s)^2, so that
``omega * t`` is a phase.  All functions act on dense ``(N+1, N+1)`` arrays in
the Dicke basis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import HERMITIAN_TOL, check_hermitian, eigh, number_operator

RELATIVE_RANK_CUTOFF = 1e-12


class DegenerateProblemError(ValueError):
    """The right-hand side lives entirely on the discarded kernel of rho_bar."""


class InconsistentInputError(ValueError):
    """Inputs do not describe a valid estimation problem."""


@dataclass(frozen=True)
class GaussianPriorSpec:
    """Zero-mean Gaussian prior on the detuning."""

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"prior variance must be > 0, got {self.variance!r}")


@dataclass(frozen=True)
class EstimationStrategy:
    """Projective measurement with one real estimate per outcome.

    ``projectors[:, x]`` is the measurement vector of outcome ``x`` and
    ``estimates[x]`` the frequency reported for it.
    """

    projectors: np.ndarray
    estimates: np.ndarray

    def __post_init__(self):
        proj = np.array(self.projectors, dtype=complex)
        est = np.array(self.estimates, dtype=float)
        if proj.ndim != 2:
            raise ValueError("projectors must be a 2-d array of column vectors")
        if est.shape != (proj.shape[1],):
            raise ValueError(
                f"need one estimate per projector: {proj.shape[1]} projectors, {est.size} estimates"
            )
        gram = proj.conj().T @ proj
        err = np.max(np.abs(gram - np.eye(proj.shape[1]))) if gram.size else 0.0
        if err > 1e-10:
            raise ValueError(f"projector columns are not orthonormal (max deviation {err:.2e})")
        proj.setflags(write=False)
        est.setflags(write=False)
        object.__setattr__(self, "projectors", proj)
        object.__setattr__(self, "estimates", est)

    def observable(self) -> np.ndarray:
        """Estimator observable ``sum_x est_x |x><x|``."""
        v = self.projectors
        return (v * self.estimates) @ v.conj().T


def _default_generator(dim):
    return number_operator(dim - 1)


def _cutoff(eigenvalues, rank_cutoff):
    if rank_cutoff is not None:
        return rank_cutoff
    return RELATIVE_RANK_CUTOFF * max(float(np.max(eigenvalues)), 0.0)


def dephasing_factors(dim: int, t: float, variance: float) -> np.ndarray:
    """``g[n, m] = exp(-(n-m)^2 t^2 variance / 2)``."""
    k = np.subtract.outer(np.arange(dim), np.arange(dim))
    return np.exp(-0.5 * k**2 * t**2 * variance)


def average_state(rho, t: float, effective_variance: float) -> np.ndarray:
    """Average ``rho`` over a Gaussian phase ``omega * t`` with the given spread.

    Coherence ``rho[n, m]`` is suppressed by ``exp(-(n-m)^2 t^2 var / 2)``;
    populations are untouched.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if effective_variance < 0:
        raise ValueError(f"effective_variance must be >= 0, got {effective_variance!r}")
    rho = np.asarray(rho, dtype=complex)
    return rho * dephasing_factors(rho.shape[0], t, effective_variance)


def rho_prime_gaussian(rho_bar, H, t: float, weight: float) -> np.ndarray:
    """``i t weight [rho_bar, H]``.

    With ``weight`` the prior variance this is the first moment
    ``int p(omega) omega rho_omega``; under time-dependent noise pass the
    kernel average K1 instead.
    """
    rho_bar = np.asarray(rho_bar, dtype=complex)
    H = _default_generator(rho_bar.shape[0]) if H is None else np.asarray(H, dtype=complex)
    if H.shape != rho_bar.shape:
        raise ValueError(f"dimension mismatch: rho_bar {rho_bar.shape} vs H {H.shape}")
    return 1j * t * weight * (rho_bar @ H - H @ rho_bar)


def solve_sld(rho_bar, rho_prime, rank_cutoff: float | None = None) -> np.ndarray:
    """Solve ``{L, rho_bar} / 2 = rho_prime`` for Hermitian ``L``.

    Works in the eigenbasis of ``rho_bar``: ``L_ij = 2 rho'_ij / (l_i + l_j)``.
    Pairs with ``l_i + l_j`` at or below ``rank_cutoff`` (default
    ``1e-12 * max(l)``) are set to zero, which restricts the solution to the
    support of ``rho_bar``.
    """
    rho_prime = check_hermitian(rho_prime, tol=HERMITIAN_TOL, name="rho_prime")
    lam, vecs = eigh(rho_bar)
    cut = _cutoff(lam, rank_cutoff)
    denom = lam[:, None] + lam[None, :]
    keep = denom > cut
    rp = vecs.conj().T @ rho_prime @ vecs
    retained = np.abs(rp[keep]).max(initial=0.0)
    total = np.abs(rp).max(initial=0.0)
    if total > 0 and retained <= 1e-14 * total:
        raise DegenerateProblemError(
            "rho_prime has no weight on the support of rho_bar; the estimator is undefined"
        )
    l_eig = np.zeros_like(rp)
    l_eig[keep] = 2 * rp[keep] / denom[keep]
    L = vecs @ l_eig @ vecs.conj().T
    return 0.5 * (L + L.conj().T)


def sld_residual(L, rho_bar, rho_prime, rank_cutoff: float | None = None) -> float:
    """Max-norm residual of the anticommutator equation on the retained support."""
    lam, vecs = eigh(rho_bar)
    keep = (lam[:, None] + lam[None, :]) > _cutoff(lam, rank_cutoff)
    r = 0.5 * (L @ rho_bar + rho_bar @ L) - rho_prime
    r_eig = vecs.conj().T @ r @ vecs
    return float(np.abs(r_eig[keep]).max(initial=0.0))


def qfi(rho, H=None, t: float = 1.0, rank_cutoff: float | None = None) -> float:
    """Quantum Fisher information of ``rho`` for the generator ``H t``.

    ``2 t^2 sum_ij |<i|H|j>|^2 (l_i - l_j)^2 / (l_i + l_j)`` over eigenpairs of
    ``rho`` with ``l_i + l_j`` above the cutoff.
    """
    rho = np.asarray(rho, dtype=complex)
    H = _default_generator(rho.shape[0]) if H is None else np.asarray(H, dtype=complex)
    lam, vecs = eigh(rho)
    h = vecs.conj().T @ H @ vecs
    denom = lam[:, None] + lam[None, :]
    keep = denom > _cutoff(lam, rank_cutoff)
    diff2 = (lam[:, None] - lam[None, :]) ** 2
    terms = np.abs(h[keep]) ** 2 * diff2[keep] / denom[keep]
    return float(max(2 * t**2 * terms.sum(), 0.0))


def bayes_variance(prior_variance: float, rho_bar, rho_prime, L) -> float:
    """Posterior variance ``prior - Tr(rho_bar L^2)`` for the optimal ``L``.

    Raises
    ------
    InconsistentInputError
        If the result falls outside ``[0, prior_variance]`` by more than 1e-9,
        which means ``L`` does not solve the equation for these inputs.
    """
    gain = np.trace(rho_bar @ L @ L).real
    value = prior_variance - gain
    if not (-1e-9 <= value <= prior_variance + 1e-9):
        raise InconsistentInputError(
            f"posterior variance {value!r} outside [0, {prior_variance!r}]"
        )
    return float(value)


def variance_via_qfi(prior_variance: float, rho_bar, H=None, t: float = 1.0) -> float:
    """Gaussian-prior shortcut ``prior * (1 - prior * F(rho_bar, H t))``."""
    return prior_variance * (1.0 - prior_variance * qfi(rho_bar, H, t))


def strategy_from_L(L) -> EstimationStrategy:
    vals, vecs = eigh(L)
    return EstimationStrategy(vecs, vals)


def optimal_estimator(rho, t, prior_variance, effective_variance=None, k1_weight=None):
    """Optimal observable and posterior variance for a fixed input state.

    ``effective_variance`` spreads the state and ``k1_weight`` scales the
    first moment; both default to ``prior_variance`` (stationary Gaussian
    prior, no extra dephasing).

    Returns
    -------
    L : ndarray
    variance : float
    """
    v_eff = prior_variance if effective_variance is None else effective_variance
    k1 = prior_variance if k1_weight is None else k1_weight
    rho_bar = average_state(rho, t, v_eff)
    rho_p = rho_prime_gaussian(rho_bar, None, t, k1)
    L = solve_sld(rho_bar, rho_p)
    return L, bayes_variance(prior_variance, rho_bar, rho_p, L)
