"""Delayed loss of stability in singularly perturbed gradient flows.

Tools for the flow eps u' = -grad_x F(t, u): spectral stability times of
the trivial equilibrium, stiff integration in log-polar coordinates, jump
detection over sweeps in eps, frozen heteroclinics and jump targets, and
the Gronwall/dissipation diagnostics that certify the delay.
"""

from .critical import (CriticalPoint, CriticalPointSet, OmegaLimit,
                       OneDExtremes, find_critical_points, omega_limit,
                       one_d_extremes)
from .errors import (AmbiguityError, BlowUpError, BoundInapplicableError,
                     ConfigError, ConstructionError, DelayflowError,
                     DomainError, EvaluationError, HypothesisError,
                     NonConvergenceError, NotFoundError, NumericalError,
                     SpectralError, StiffFailureError, UnsupportedRegimeError)
from .integrate import (EnergyBalanceReport, EventRecord, EventSpec,
                        HittingResult, SolveOptions, Trajectory,
                        dissipation_integral, energy_balance_residual,
                        first_hitting, solve_autonomous, solve_singular)
from .limits import (DelayReport, DiagnosticBounds, EnergyGapReport,
                     GronwallReport, Heteroclinic, JumpEstimate,
                     JumpPrediction, LimitCurve, MuReport, RescaledOrbit,
                     SweepResult, auto_mu, best_shift_sup_error,
                     check_energy_gap, check_gronwall_bounds,
                     diagnostic_bounds, estimate_limit_curve, heteroclinic,
                     predict_jump_target, rescale_trajectory,
                     run_epsilon_sweep, verify_delay)
from .models import (AssumptionReport, EnergyModel, PolynomialTerm,
                     ValidationTolerances, make_commuting_family,
                     make_polynomial_model, make_quartic_family,
                     make_rotating_family, model_from_spec,
                     validate_assumptions)
from .spectral import (EigenspaceReport, NondegeneracyReport, SpectralProfile,
                       StabilityTimes, blowup_time, check_fixed_eigenspace,
                       check_nondegeneracy, critical_time, lambda1,
                       lambda1_primitive, spectral_profile)

__version__ = "0.1.0"

__all__ = [
    "AmbiguityError", "AssumptionReport", "BlowUpError",
    "BoundInapplicableError", "ConfigError", "ConstructionError",
    "CriticalPoint", "CriticalPointSet", "DelayReport", "DelayflowError",
    "DiagnosticBounds", "DomainError", "EigenspaceReport",
    "EnergyBalanceReport", "EnergyGapReport", "EnergyModel", "EvaluationError",
    "EventRecord", "EventSpec", "GronwallReport", "Heteroclinic",
    "HittingResult", "HypothesisError", "JumpEstimate", "JumpPrediction",
    "LimitCurve", "MuReport", "NonConvergenceError", "NondegeneracyReport",
    "NotFoundError", "NumericalError", "OmegaLimit", "OneDExtremes",
    "PolynomialTerm", "RescaledOrbit", "SolveOptions", "SpectralError",
    "SpectralProfile", "StabilityTimes", "StiffFailureError", "SweepResult",
    "Trajectory", "UnsupportedRegimeError", "ValidationTolerances",
    "auto_mu", "best_shift_sup_error", "blowup_time", "check_energy_gap",
    "check_fixed_eigenspace", "check_gronwall_bounds", "check_nondegeneracy",
    "critical_time", "diagnostic_bounds", "dissipation_integral",
    "energy_balance_residual", "estimate_limit_curve", "find_critical_points",
    "first_hitting", "heteroclinic", "lambda1", "lambda1_primitive",
    "make_commuting_family", "make_polynomial_model", "make_quartic_family",
    "make_rotating_family", "model_from_spec", "omega_limit",
    "one_d_extremes", "predict_jump_target", "rescale_trajectory",
    "run_epsilon_sweep", "solve_autonomous", "solve_singular",
    "spectral_profile", "validate_assumptions", "verify_delay",
]
