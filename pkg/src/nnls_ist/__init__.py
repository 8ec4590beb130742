"""Inverse scattering for the nonlocal NLS equation i q_t + q_xx + 2 sigma q^2 conj(q(-x)) = 0.

Direct scattering, closed-form solitons, a Riemann-Hilbert solver with
pole regularization, conserved quantities and a split-step reference
integrator.
"""

__version__ = "0.1.0"

from .conservation import (ConditionReport, ConservedQuantities, bessel_i0, check_near_soliton,
                           check_small_H11, check_small_L1, conserved_by_quadrature, log_a1_fit,
                           log_a1_moments, riccati_densities)
from .pde import Trajectory, compare_fields, split_step
from .potential import Potential, symmetric_grid
from .regularizer import blowup_map, chain_build, reconstruct_full, regularize_reflection
from .rh import build_jump, cauchy_apply, delta_function, eval_M, reconstruct_q, solve_field, solve_mu
from .scattering import (SpectralData, count_zeros, discrete_spectrum, jost_limits, locate_zeros,
                         norming_data, scattering_table, trace_formula_residual)
from .solitons import alpha_products, blowup_times, multi_soliton, one_soliton, pde_residual
from .spectrum import DiscreteSpectrum

__all__ = [
    "ConditionReport", "ConservedQuantities", "DiscreteSpectrum", "Potential", "SpectralData",
    "Trajectory", "alpha_products", "bessel_i0", "blowup_map", "blowup_times", "build_jump",
    "cauchy_apply", "chain_build", "check_near_soliton", "check_small_H11", "check_small_L1",
    "compare_fields", "conserved_by_quadrature", "count_zeros", "delta_function",
    "discrete_spectrum", "eval_M", "jost_limits", "locate_zeros", "log_a1_fit", "log_a1_moments",
    "multi_soliton", "norming_data", "one_soliton", "pde_residual", "reconstruct_full",
    "reconstruct_q", "regularize_reflection", "riccati_densities", "scattering_table",
    "solve_field", "solve_mu", "split_step", "symmetric_grid", "trace_formula_residual",
]
