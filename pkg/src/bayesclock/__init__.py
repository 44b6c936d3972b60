"""Optimal Bayesian frequency estimation with N two-level atoms.

Probe states live on the symmetric subspace; the local oscillator drifts as
an Ornstein-Uhlenbeck process and the atoms see extra white-noise dephasing.
"""
from .hilbert import (SymmetricState, Spectral, make_ghz, make_product, make_sine, make_state,
                      number_operator, to_density, eigh)
from .estimator import (EstimationStrategy, GaussianPriorSpec, average_state, bayes_variance,
                        optimal_estimator, qfi, rho_prime_gaussian, solve_sld, strategy_from_L,
                        variance_via_qfi)
from .noise import (OUParams, WhiteNoiseParams, effective_prior_variance, k1_kernel, ou_k1,
                    ou_k1_covariance, ou_k2,
                    ou_variance, sample_ou_path, white_k2)
from .optimizer import (OptimizationResult, OptimizerConfig, iterate_once, optimize_state,
                        r_curve, r_value, random_state, state_update_operator)
from .clockloop import (ClockScenario, reduction_curve, scaling_table, stationary_variance,
                        variance_after_estimation)

__version__ = "0.1.0"
