"""Independent checks of the closed forms.

Monte Carlo: sample LO trajectories, integrate the accumulated phase, and
average the rotated state directly.  Quadrature: evaluate the raw Bayesian
cost ``int p(w) sum_x p(x|w) (w - est_x)^2`` of a given strategy with
Gauss-Hermite nodes instead of going through the optimal-estimator formula.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .estimator import (EstimationStrategy, GaussianPriorSpec, average_state,
                        rho_prime_gaussian)
from .hilbert import SymmetricState, make_ghz, to_density
from .noise import (REFERENCE_OU, REFERENCE_WHITE, OUParams, WhiteNoiseParams,
                    effective_prior_variance, k1_kernel, ou_k2, ou_variance, _time_grid)

BATCH = 10_000
N_SIGMA = 3.0


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error.

    For complex quantities ``std_error`` carries the standard error of the
    real part in its real component and of the imaginary part in its
    imaginary component.
    """

    value: np.ndarray
    std_error: np.ndarray
    samples: int

    def within(self, expected, n_sigma: float = N_SIGMA, atol: float = 1e-12) -> np.ndarray:
        """Elementwise: is ``expected`` inside ``n_sigma`` standard errors?"""
        diff = np.asarray(self.value) - np.asarray(expected)
        se = np.asarray(self.std_error)
        ok_re = np.abs(diff.real) <= n_sigma * np.real(se) + atol
        ok_im = np.abs(np.imag(diff)) <= n_sigma * np.imag(se) + atol
        return ok_re & ok_im

    def z_scores(self, expected) -> np.ndarray:
        diff = np.asarray(self.value) - np.asarray(expected)
        se = np.asarray(self.std_error)
        with np.errstate(divide="ignore", invalid="ignore"):
            zr = np.where(np.real(se) > 0, np.abs(diff.real) / np.real(se), 0.0)
            zi = np.where(np.imag(se) > 0, np.abs(np.imag(diff)) / np.imag(se), 0.0)
        return np.maximum(zr, zi)


class _Moments:
    """Running sums for means and (co)variances; merges associatively."""

    def __init__(self):
        self.count = 0
        self.sum = None
        self.outer = None

    def add(self, samples):
        # samples: (n, p) real array
        s = samples.sum(axis=0)
        o = samples.T @ samples
        if self.sum is None:
            self.sum, self.outer = s, o
        else:
            self.sum = self.sum + s
            self.outer = self.outer + o
        self.count += samples.shape[0]

    def merge(self, other: "_Moments") -> "_Moments":
        out = _Moments()
        out.count = self.count + other.count
        out.sum = self.sum + other.sum
        out.outer = self.outer + other.outer
        return out

    def mean_cov(self):
        n = self.count
        mean = self.sum / n
        cov = (self.outer - n * np.outer(mean, mean)) / (n - 1)
        return mean, cov / n  # covariance of the mean


def default_dt(ou: OUParams, t: float) -> float:
    return min(1e-3 / ou.gamma, t / 1000)


def sample_phases(ou: OUParams, wn: WhiteNoiseParams | None, t: float, n: int, dt: float, rng):
    """Draw ``n`` trajectories; return (total phase, LO-only phase, omega(t)).

    The LO phase is the trapezoidal integral of the sampled OU path; white
    noise adds an exact Gaussian phase of variance ``beta t``.
    """
    times = _time_grid(t, dt)
    steps = np.diff(times)
    omega = np.sqrt(ou.initial_variance) * rng.standard_normal(n)
    phase = np.zeros(n)
    decay = np.exp(-ou.gamma * steps)
    kick = np.sqrt(-ou.alpha * np.expm1(-2 * ou.gamma * steps))
    for h, d, k in zip(steps, decay, kick):
        nxt = omega * d + k * rng.standard_normal(n)
        phase += 0.5 * h * (omega + nxt)
        omega = nxt
    total = phase.copy()
    if wn is not None and wn.beta > 0:
        total += np.sqrt(wn.beta * t) * rng.standard_normal(n)
    return total, phase, omega


def _run(ou, wn, t, n_samples, dt, seed, features):
    if n_samples < 100:
        raise ValueError(f"n_samples must be >= 100, got {n_samples}")
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    dt = default_dt(ou, t) if dt is None else dt
    rng = np.random.default_rng(seed)
    acc = _Moments()
    done = 0
    while done < n_samples:
        n = min(BATCH, n_samples - done)
        acc.add(features(*sample_phases(ou, wn, t, n, dt, rng)))
        done += n
    return acc


def _entry_estimate(rho, acc, ks):
    """Combine per-offset moments of ``z_k`` into an estimate of ``rho[n, m] E[z_{n-m}]``."""
    mean, cov = acc.mean_cov()
    K = len(ks)
    x, y = mean[:K], mean[K:]
    vxx, vyy = np.diag(cov)[:K], np.diag(cov)[K:]
    vxy = np.array([cov[i, K + i] for i in range(K)])
    dim = rho.shape[0]
    idx = np.subtract.outer(np.arange(dim), np.arange(dim)) + (dim - 1)
    a, b = rho.real, rho.imag
    zx, zy = x[idx], y[idx]
    value = rho * (zx + 1j * zy)
    var_re = a**2 * vxx[idx] + b**2 * vyy[idx] - 2 * a * b * vxy[idx]
    var_im = a**2 * vyy[idx] + b**2 * vxx[idx] + 2 * a * b * vxy[idx]
    se = np.sqrt(np.maximum(var_re, 0)) + 1j * np.sqrt(np.maximum(var_im, 0))
    return value, se


def mc_average_state(state: SymmetricState, ou: OUParams, wn: WhiteNoiseParams | None,
                     t: float, n_samples: int = 100_000, dt: float | None = None,
                     seed=0) -> McEstimate:
    """Trajectory average of ``U rho U^dagger`` with ``U = exp(-i H phase)``."""
    rho = to_density(state)
    ks = np.arange(-state.n_atoms, state.n_atoms + 1)

    def features(total, lo_phase, omega_t):
        z = np.exp(-1j * np.outer(total, ks))
        return np.hstack([z.real, z.imag])

    acc = _run(ou, wn, t, n_samples, dt, seed, features)
    value, se = _entry_estimate(rho, acc, ks)
    return McEstimate(value, se, acc.count)


def mc_rho_prime(state: SymmetricState, ou: OUParams, t: float, n_samples: int = 100_000,
                 dt: float | None = None, seed=0,
                 wn: WhiteNoiseParams | None = None) -> McEstimate:
    """Trajectory average of ``omega(t) U rho U^dagger``.

    White noise is optional and enters only through the phase, since it is
    independent of the LO detuning.
    """
    rho = to_density(state)
    ks = np.arange(-state.n_atoms, state.n_atoms + 1)

    def features(total, lo_phase, omega_t):
        z = omega_t[:, None] * np.exp(-1j * np.outer(total, ks))
        return np.hstack([z.real, z.imag])

    acc = _run(ou, wn, t, n_samples, dt, seed, features)
    value, se = _entry_estimate(rho, acc, ks)
    return McEstimate(value, se, acc.count)


def mc_kernels(ou: OUParams, t: float, n_samples: int = 100_000, dt: float | None = None,
               seed=0):
    """Sample estimates of ``K1(t)``, ``K2(t)`` and ``var(t)`` of the LO detuning.

    Returns
    -------
    dict of McEstimate keyed by ``"k1"``, ``"k2"``, ``"variance"``.
    """
    def features(total, lo_phase, omega_t):
        return np.column_stack([lo_phase * omega_t / t, lo_phase**2 / t**2, omega_t**2])

    acc = _run(ou, None, t, n_samples, dt, seed, features)
    mean, cov = acc.mean_cov()
    se = np.sqrt(np.diag(cov))
    return {key: McEstimate(mean[i], se[i], acc.count)
            for i, key in enumerate(("k1", "k2", "variance"))}


def gauss_hermite_prior(prior: GaussianPriorSpec, quad_points: int):
    """Nodes and weights integrating against ``N(0, prior.variance)``."""
    x, w = roots_hermite(quad_points)  # stable beyond the ~360 nodes numpy manages
    return np.sqrt(2 * prior.variance) * x, w / np.sqrt(np.pi)


def direct_cost(state: SymmetricState, strategy: EstimationStrategy, prior: GaussianPriorSpec,
                t: float, quad_points: int = 128) -> float:
    """Average squared error of ``strategy`` under the decoherence-free channel."""
    if quad_points < 32:
        raise ValueError(f"quad_points must be >= 32, got {quad_points}")
    if not isinstance(strategy, EstimationStrategy):
        strategy = EstimationStrategy(*strategy)
    if strategy.projectors.shape[0] != state.dim:
        raise ValueError(f"strategy dimension {strategy.projectors.shape[0]} != state dimension {state.dim}")
    omegas, weights = gauss_hermite_prior(prior, quad_points)
    n = np.arange(state.dim)
    evolved = np.exp(-1j * np.outer(omegas, n) * t) * state.amplitudes  # (Q, d)
    probs = np.abs(evolved @ strategy.projectors.conj()) ** 2  # (Q, X)
    err2 = (omegas[:, None] - strategy.estimates[None, :]) ** 2
    return float(weights @ np.sum(probs * err2, axis=1))


def bayes_estimates(state: SymmetricState, basis, prior: GaussianPriorSpec, t: float):
    """Posterior-mean estimate for each outcome of a fixed measurement basis.

    ``<x|rho'|x> / <x|rho_bar|x>``; outcomes of zero probability get 0.
    """
    rho_bar = average_state(to_density(state), t, prior.variance)
    rho_p = rho_prime_gaussian(rho_bar, None, t, prior.variance)
    basis = np.asarray(basis)
    num = np.einsum("ix,ij,jx->x", basis.conj(), rho_p, basis).real
    den = np.einsum("ix,ij,jx->x", basis.conj(), rho_bar, basis).real
    return np.where(den > 1e-300, num / np.where(den > 1e-300, den, 1.0), 0.0)


def random_strategy(state: SymmetricState, prior: GaussianPriorSpec, t: float, rng) -> EstimationStrategy:
    """Haar-random measurement basis with its best (posterior-mean) estimates."""
    d = state.dim
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return EstimationStrategy(q, bayes_estimates(state, q, prior, t))


def consistency_report(n_atoms: int = 3, times=(0.2, 1.0, 5.0), n_samples: int = 100_000,
                       seed: int = 0, ou: OUParams = REFERENCE_OU,
                       wn: WhiteNoiseParams = REFERENCE_WHITE, k1_form: str = "undecayed_offset"):
    """Compare Monte Carlo averages against the closed forms for a GHZ probe.

    Returns a list of dicts with keys ``name``, ``analytic``, ``mc``,
    ``std_error``, ``z``, ``pass``.  Matrix checks report the worst entry.
    """
    state = make_ghz(n_atoms)
    rho = to_density(state)
    checks = []
    for i, t in enumerate(times):
        sub = seed + 1000 * i
        kern = mc_kernels(ou, t, n_samples, seed=sub)
        k1 = k1_kernel(ou, t, k1_form)
        for key, exact in (("k1", k1), ("k2", ou_k2(ou, t)),
                           ("variance", ou_variance(ou, t))):
            est = kern[key]
            z = float(abs(est.value - exact) / est.std_error)
            checks.append({"name": f"{key}(t={t:g})", "analytic": exact, "mc": float(est.value),
                           "std_error": float(est.std_error), "z": z, "pass": z <= N_SIGMA})
        v_eff = effective_prior_variance(ou, wn, t)
        rho_bar = average_state(rho, t, v_eff)
        rho_p = rho_prime_gaussian(rho_bar, None, t, k1)
        for name, est, exact in (
            ("rho_bar", mc_average_state(state, ou, wn, t, n_samples, seed=sub + 1), rho_bar),
            ("rho_prime", mc_rho_prime(state, ou, t, n_samples, seed=sub + 2, wn=wn), rho_p),
        ):
            z = est.z_scores(exact)
            worst = np.unravel_index(np.argmax(z), z.shape)
            checks.append({
                "name": f"{name}[{worst[0]},{worst[1]}](t={t:g})",
                "analytic": [float(exact[worst].real), float(exact[worst].imag)],
                "mc": [float(est.value[worst].real), float(est.value[worst].imag)],
                "std_error": [float(est.std_error[worst].real), float(est.std_error[worst].imag)],
                "z": float(z[worst]),
                "pass": bool(np.all(est.within(exact))),
            })
    return checks
