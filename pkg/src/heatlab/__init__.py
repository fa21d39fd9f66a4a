"""Numerical laboratory for heat kernels of confined diffusions.

Two independent engines (bridge Monte Carlo and a Crank-Nicolson solver)
estimate the kernel of d/dt = (1/2)Lap - V for confining potentials; the
analytic two-sided envelopes and their comparability constants are fitted
and verified against those estimates.
"""

from .backend import active_backend, backend_name
from .bridge_mc import (EngineError, ExitIdentityReport, KernelEstimate,
                        McConfig, exit_identity_check, kernel_mc,
                        sample_bridge, sample_bridge_batch, survival_mc)
from .cn_solver import (GridSpec, KernelColumn, SolverError, chapman_check,
                        convergence_order, evolve, probe, suggest_half_width)
from .envelopes import (ComparabilityConstants, EnvelopePair, envelope_power_law,
                        envelope_green, envelope_two_regime, gamma_green,
                        large_time_shape, small_time_shape, tail_profile)
from .fitting import EmptyFitError, FitPoint, FitReport, fit, regime_sweep
from .green import GreenEstimate, InsufficientPathsError, green
from .potentials import (MonotonicityClass, PotentialSpec, ProfileG,
                         check_assumption_h, classify_t0, crossover_time,
                         eval_g, exponential_potential, harmonic_potential,
                         power_potential, regime, tabulated_potential,
                         zero_potential)
from .reference import (IntervalDirichletSpec, free_green, gaussian_kernel,
                        interval_dirichlet_q, interval_exit_density,
                        mehler_kernel)

__version__ = "0.1.0"
