"""Frequency estimation inside a clock cycle with LO noise and atomic dephasing.

After interrogating for ``t`` the detuning has variance ``var(t)``; the best
strategy leaves

    var(t) - K1(t)^2 F(rho_bar, H t),

where ``rho_bar`` is the probe state spread by the effective prior
``K2(t) + beta / t``.  Equivalently ``var(t) - K1^2 / v_K [1 - R(t sqrt(v_K))]``
with ``R`` the decoherence-free reduction factor.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .estimator import average_state, qfi
from .hilbert import SymmetricState, make_state, to_density
from .noise import (K1_FORMS, OUParams, WhiteNoiseParams, effective_prior_variance,
                    k1_kernel, ou_variance)
from .optimizer import OptimizerConfig, optimize_state, perturb, r_value

logger = logging.getLogger(__name__)

SCAN_POINTS = 200
SCAN_RANGE = (1e-3, 10.0)  # in units of 1/gamma
BISECTION_RTOL = 1e-4
STATIONARY_LOWER = 1e-6  # in units of alpha

# Optimizer settings for per-time-point state optimization: the warm start
# from the neighbouring point does most of the work.
CLOCK_OPTIMIZER = OptimizerConfig(restarts=1)


class NoStationaryPoint(ValueError):
    """Estimation cannot hold the variance below the free-running level."""


@dataclass(frozen=True)
class ClockScenario:
    ou: OUParams
    wn: WhiteNoiseParams
    n_atoms: int
    family: str = "optimal"
    k1_form: str = "undecayed_offset"

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        if self.family not in ("optimal", "ghz", "product", "sine"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.k1_form not in K1_FORMS:
            raise ValueError(f"unknown k1_form {self.k1_form!r}")


class ClockPoint(NamedTuple):
    t: float
    prior_variance: float
    posterior_variance: float
    ratio: float
    state: SymmetricState


class _StateProvider:
    """Supplies the probe state for each interrogation time.

    Fixed families return their state.  The optimal family runs the
    optimizer, warm-starting from the last state it produced.
    """

    def __init__(self, family, n_atoms, config=None):
        self.family = family
        self.n_atoms = n_atoms
        self.config = config or CLOCK_OPTIMIZER
        self.rng = np.random.default_rng(self.config.seed + 104729)
        self.last = None
        self.fixed = None if family == "optimal" else make_state(family, n_atoms)

    def __call__(self, t, prior_var, v_eff, k1):
        if self.fixed is not None:
            return self.fixed
        warm = () if self.last is None else (perturb(self.last, self.rng),)
        res = optimize_state(self.n_atoms, t, prior_var, v_eff, k1,
                             config=self.config, initial_states=warm)
        self.last = res.state
        return res.state


def _kernels(s: ClockScenario, t):
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r} (white-noise kernel diverges at 0)")
    return (ou_variance(s.ou, t), k1_kernel(s.ou, t, s.k1_form),
            effective_prior_variance(s.ou, s.wn, t))


def _evaluate(s: ClockScenario, t, provider):
    prior, k1, v_eff = _kernels(s, t)
    state = provider(t, prior, v_eff, k1)
    rho_bar = average_state(to_density(state), t, v_eff)
    post = prior - k1**2 * qfi(rho_bar, None, t)
    return ClockPoint(t, prior, post, post / s.ou.initial_variance, state)


def variance_after_estimation(s: ClockScenario, t: float,
                              config: OptimizerConfig | None = None,
                              initial_states=()) -> float:
    """Posterior LO variance after one interrogation of length ``t``."""
    provider = _StateProvider(s.family, s.n_atoms, config)
    if initial_states:
        provider.last = initial_states[0]
    return _evaluate(s, t, provider).posterior_variance


def variance_via_reduction_factor(s: ClockScenario, t: float, state: SymmetricState) -> float:
    """Same quantity through the natural-units reduction factor of ``state``.

    ``R`` is recomputed exactly at ``tau = t sqrt(v_K)``, never interpolated.
    """
    prior, k1, v_eff = _kernels(s, t)
    tau = t * np.sqrt(v_eff)
    return prior - k1**2 / v_eff * (1.0 - r_value(state, tau))


def reduction_curve(s: ClockScenario, t_grid, config: OptimizerConfig | None = None):
    """One :class:`ClockPoint` per time, ratio relative to the initial variance."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be positive and strictly ascending")
    provider = _StateProvider(s.family, s.n_atoms, config)
    return [_evaluate(s, t, provider) for t in t_grid]


def minimize_over_time(s: ClockScenario, config: OptimizerConfig | None = None,
                       scan_points: int = SCAN_POINTS, threshold: float | None = None):
    """Minimum of the posterior variance over interrogation time.

    A log-spaced scan over ``[1e-3, 10] / gamma`` brackets the minimum, and
    golden-section search in ``log t`` refines it.  If ``threshold`` is given
    the scan stops at the first point at or below it, returning that point.

    Returns
    -------
    ClockPoint
    """
    lo, hi = SCAN_RANGE
    grid = np.geomspace(lo / s.ou.gamma, hi / s.ou.gamma, scan_points)
    provider = _StateProvider(s.family, s.n_atoms, config)
    points = []
    for t in grid:
        p = _evaluate(s, t, provider)
        points.append(p)
        if threshold is not None and p.posterior_variance <= threshold:
            return p
    values = np.array([p.posterior_variance for p in points])
    i = int(np.argmin(values))
    if i == 0 or i == len(grid) - 1:
        return points[i]

    provider.last = points[i].state
    cache = {}

    def objective(log_t):
        p = _evaluate(s, float(np.exp(log_t)), provider)
        cache[log_t] = p
        return p.posterior_variance

    logs = np.log(grid[i - 1:i + 2])
    res = minimize_scalar(objective, bracket=tuple(logs), method="golden",
                          options={"xtol": 1e-6})
    best = cache.get(res.x) or _evaluate(s, float(np.exp(res.x)), provider)
    return best if best.posterior_variance <= points[i].posterior_variance else points[i]


def stationary_variance(n_atoms: int, ou_alpha: float, ou_gamma: float,
                        wn: WhiteNoiseParams, family: str = "optimal",
                        config: OptimizerConfig | None = None,
                        rtol: float = BISECTION_RTOL, k1_form: str = "undecayed_offset"):
    """Smallest initial variance that one estimation cycle can maintain.

    Bisects (in log space) on the initial variance ``v0`` over
    ``[1e-6 alpha, alpha]`` for the condition ``min_t post(t; v0) <= v0``.

    Returns
    -------
    variance : float
        Stationary initial variance, Hz^2.
    t_opt : float
        Interrogation time attaining it, s.

    Raises
    ------
    NoStationaryPoint
        If no ``v0`` below ``alpha`` can be held.
    """
    def scenario(v0):
        return ClockScenario(OUParams(ou_alpha, ou_gamma, v0), wn, n_atoms, family, k1_form)

    def holds(v0):
        p = minimize_over_time(scenario(v0), config, threshold=v0)
        return p.posterior_variance <= v0

    # at v0 = alpha any information at all lowers the variance, so "not found"
    # means no v0 below alpha can be held
    hi = ou_alpha
    if not holds(hi):
        raise NoStationaryPoint(
            f"N={n_atoms}, family={family}: estimation cannot keep variance below alpha={ou_alpha}"
        )
    lo = STATIONARY_LOWER * ou_alpha
    if holds(lo):
        logger.warning("stationary variance below search floor %g", lo)
        hi = lo
    else:
        while (hi - lo) / hi > rtol:
            mid = np.sqrt(lo * hi)
            if holds(mid):
                hi = mid
            else:
                lo = mid
    if hi == ou_alpha:
        raise NoStationaryPoint(
            f"N={n_atoms}, family={family}: no initial variance below alpha={ou_alpha} is held"
        )
    best = minimize_over_time(scenario(hi), config)
    return hi, best.t


def scaling_table(n_grid, family: str = "optimal", mode: str = "decoherence_free_opt_tau",
                  ou: OUParams | None = None, wn: WhiteNoiseParams | None = None,
                  config: OptimizerConfig | None = None, tau_range=(1e-2, 3.0),
                  tau_points: int = 40, k1_form: str = "undecayed_offset"):
    """Best variance per atom number with its optimal time.

    ``decoherence_free_opt_tau`` minimizes ``R(tau)`` (unit prior variance,
    time in natural units); ``stationary`` returns the stationary variance
    and its interrogation time for the given noise.

    Returns
    -------
    list of (N, variance, argmin_time)
    """
    rows = []
    for n in n_grid:
        n = int(n)
        if mode == "decoherence_free_opt_tau":
            rows.append((n, *_best_tau(n, family, config, tau_range, tau_points)))
        elif mode == "stationary":
            if ou is None or wn is None:
                raise ValueError("stationary mode needs ou and wn parameters")
            try:
                rows.append((n, *stationary_variance(n, ou.alpha, ou.gamma, wn, family, config,
                                                     k1_form=k1_form)))
            except NoStationaryPoint:
                rows.append((n, float("nan"), float("nan")))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return rows


def _best_tau(n_atoms, family, config, tau_range, tau_points):
    """Minimize ``R(tau)`` over a log scan followed by golden-section refinement."""
    taus = np.geomspace(*tau_range, tau_points)
    if family == "optimal":
        config = config or OptimizerConfig(restarts=2)
        rng = np.random.default_rng(config.seed + 15485863)
        last = [None]

        def value(tau):
            warm = () if last[0] is None else (perturb(last[0], rng),)
            res = optimize_state(n_atoms, tau, 1.0, config=config, initial_states=warm)
            last[0] = res.state
            return res.variance
    else:
        state = make_state(family, n_atoms)

        def value(tau):
            return r_value(state, tau)

    values = np.array([value(tau) for tau in taus])
    i = int(np.argmin(values))
    if i in (0, len(taus) - 1):
        return float(values[i]), float(taus[i])
    res = minimize_scalar(lambda x: value(np.exp(x)), bracket=tuple(np.log(taus[i - 1:i + 2])),
                          method="golden", options={"xtol": 1e-6})
    if res.fun < values[i]:
        return float(res.fun), float(np.exp(res.x))
    return float(values[i]), float(taus[i])
