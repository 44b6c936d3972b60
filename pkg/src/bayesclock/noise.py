"""Local-oscillator and atomic dephasing noise.

The LO detuning is an Ornstein-Uhlenbeck process started from a Gaussian
offset of variance ``initial_variance``; its two-point function is

    K(t1, t2) = alpha [exp(-gamma |t1-t2|) - exp(-gamma (t1+t2))]
                + initial_variance exp(-gamma (t1+t2)).

Atomic dephasing is white noise of strength ``beta``.  The kernels entering
the averaged state are the time averages ``K1(t) = (1/t) int_0^t K(s, t) ds``
and ``K2(t) = (1/t^2) int int K(s1, s2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

SERIES_THRESHOLD = 1e-6
# x + expm1(-x) cancels to ~x^2/2, losing about 1e-16/x relative accuracy,
# so the ramp switches to its series much earlier
RAMP_SERIES_THRESHOLD = 1e-2


@dataclass(frozen=True)
class OUParams:
    alpha: float
    gamma: float
    initial_variance: float

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if self.initial_variance < 0:
            raise ValueError(f"initial_variance must be >= 0, got {self.initial_variance!r}")


@dataclass(frozen=True)
class WhiteNoiseParams:
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta!r}")


# Reference scenario: alpha = 1 Hz^2, gamma = 0.2 Hz, beta = 1e-3 Hz,
# initial variance 0.167 Hz^2.
REFERENCE_OU = OUParams(alpha=1.0, gamma=0.2, initial_variance=0.167)
REFERENCE_WHITE = WhiteNoiseParams(beta=1e-3)


def _check_t(t):
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")


def _decay_ratio(x):
    # (1 - exp(-x)) / x
    if x < SERIES_THRESHOLD:
        return 1 - x / 2 + x**2 / 6 - x**3 / 24 + x**4 / 120
    return -np.expm1(-x) / x


def _ramp_ratio(x):
    # (x + exp(-x) - 1) / x^2 = sum_j (-x)^j / (j + 2)!
    if x < RAMP_SERIES_THRESHOLD:
        return (0.5 - x / 6 + x**2 / 24 - x**3 / 120 + x**4 / 720 - x**5 / 5040
                + x**6 / 40320)
    return (x + np.expm1(-x)) / x**2


def ou_variance(p: OUParams, t: float) -> float:
    """Pointwise variance ``K(t, t)`` of the LO detuning."""
    _check_t(t)
    decay = np.exp(-2 * p.gamma * t)
    return float(p.initial_variance * decay - p.alpha * np.expm1(-2 * p.gamma * t))


def ou_k1(p: OUParams, t: float) -> float:
    """``[D (1 - e^{-g t}) + alpha (1 - e^{-g t})^2] / (g t)``, D = initial variance.

    In this form the initial-offset term is not damped by ``e^{-g t}``, i.e.
    the phase is correlated with an undecayed offset.  It is the form that
    reproduces the reference clock numbers (stationary variance 0.167 Hz^2
    for five atoms), but it exceeds the time average of
    :func:`ou_covariance` by ``D (1 - e^{-g t})^2 / (g t)``; see
    :func:`ou_k1_covariance`.
    """
    _check_t(t)
    x = p.gamma * t
    a = _decay_ratio(x)
    return float(p.initial_variance * a + p.alpha * x * a**2)


def ou_k1_covariance(p: OUParams, t: float) -> float:
    """Exact ``(1/t) int_0^t K(s, t) ds``: ``[D e^{-g t}(1 - e^{-g t}) + alpha (1 - e^{-g t})^2] / (g t)``.

    This is what trajectory averages of ``phase * omega(t) / t`` converge to.
    """
    _check_t(t)
    x = p.gamma * t
    a = _decay_ratio(x)
    return float(p.initial_variance * np.exp(-x) * a + p.alpha * x * a**2)


K1_FORMS = ("undecayed_offset", "covariance")


def k1_kernel(p: OUParams, t: float, form: str = "undecayed_offset") -> float:
    """Dispatch between :func:`ou_k1` and :func:`ou_k1_covariance`."""
    if form == "undecayed_offset":
        return ou_k1(p, t)
    if form == "covariance":
        return ou_k1_covariance(p, t)
    raise ValueError(f"unknown K1 form {form!r}; expected one of {K1_FORMS}")


def ou_k2(p: OUParams, t: float) -> float:
    """``[(D - alpha)(e^{-g t} - 1)^2 + 2 alpha (g t + e^{-g t} - 1)] / (g t)^2``."""
    _check_t(t)
    x = p.gamma * t
    a = _decay_ratio(x)
    return float((p.initial_variance - p.alpha) * a**2 + 2 * p.alpha * _ramp_ratio(x))


def ou_covariance(p: OUParams, t1, t2):
    """Two-point function ``K(t1, t2)`` including the initial offset."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    both = np.exp(-p.gamma * (t1 + t2))
    return p.alpha * (np.exp(-p.gamma * np.abs(t1 - t2)) - both) + p.initial_variance * both


def white_k2(p: WhiteNoiseParams, t: float) -> float:
    if not t > 0:
        raise ValueError(f"white-noise kernel diverges at t={t!r}; need t > 0")
    return p.beta / t


def effective_prior_variance(ou: OUParams, wn: WhiteNoiseParams, t: float) -> float:
    """Variance of the Gaussian that reproduces the noise-averaged state."""
    return ou_k2(ou, t) + white_k2(wn, t)


def sample_ou_path(p: OUParams, t_end: float, dt: float, seed=0, n_paths: int | None = None):
    """Sample the LO detuning on ``0, dt, 2 dt, ...`` up to ``t_end``.

    Uses the exact one-step OU transition, so there is no time-step bias in
    the marginals.  The last step is shortened if ``t_end`` is not a
    multiple of ``dt``.

    Parameters
    ----------
    seed : int or numpy.random.Generator
    n_paths : int, optional
        If given, return an array of shape ``(n_paths, n_steps + 1)``;
        otherwise a single path.

    Returns
    -------
    times, omega : ndarray
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if t_end < dt:
        raise ValueError(f"t_end must be >= dt, got t_end={t_end!r}, dt={dt!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    times = _time_grid(t_end, dt)
    steps = np.diff(times)
    shape = (1 if n_paths is None else n_paths,)
    omega = np.empty(shape + (len(times),))
    omega[:, 0] = np.sqrt(p.initial_variance) * rng.standard_normal(shape)
    decay = np.exp(-p.gamma * steps)
    kick = np.sqrt(-p.alpha * np.expm1(-2 * p.gamma * steps))
    for i, (d, k) in enumerate(zip(decay, kick)):
        omega[:, i + 1] = omega[:, i] * d + k * rng.standard_normal(shape)
    return times, (omega[0] if n_paths is None else omega)


def _time_grid(t_end, dt):
    n = int(np.ceil(t_end / dt - 1e-9))
    times = np.arange(n + 1) * dt
    times[-1] = t_end
    return times


CONFIG_KEYS = {"alpha", "gamma", "beta", "initial_variance"}


def read_noise_config(path) -> dict:
    """Parse a ``key = value`` noise file (``#`` starts a comment).

    Keys: alpha (Hz^2), gamma (Hz), beta (Hz), initial_variance (Hz^2).
    """
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: {key} is not a number: {value!r}") from None
    return out
