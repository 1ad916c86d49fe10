"""High-temperature Laguerre ensembles: simulation and exact limits.

An N-particle system of nonnegative interacting diffusions whose pair
coupling scales like 1/N.  The package simulates the particles, solves
the limiting moment hierarchy in exact rational arithmetic, builds the
stationary spectral measure from its Jacobi operator, and verifies that
the three views agree at finite N on a desk-scale budget.
"""

from .hierarchy import (BoundSequence, ExpPolynomial, HankelReport,
                        MomentSequence, carleman_diagnostic, default_time_grid,
                        eval_moment, hankel_psd_check, hierarchy_residual,
                        lambda_bounds, limiting_constants, solve_hierarchy,
                        stationary_constants)
from .model import (CLAMP_TOLERANCE, ConditioningError, EnsembleState,
                    InitialCondition, IntegrationError, ModelParams,
                    MomentTrace, empirical_moments, normalize_state,
                    validate_params)
from .sde import (BrownianTable, NoiseStream, SchemeConfig, ZeroNoise,
                  drift_lambda, drift_radial, forcing_term, lambda_from_radial,
                  martingale_qv_target, martingale_residual, simulate_path,
                  step_lambda, step_radial)
from .spectrum import (DiscreteMeasure, JacobiOperator, build_jacobi,
                       density_estimate, jacobi_moment, jacobi_moments_exact,
                       kolmogorov_distance, quadrature_from_jacobi,
                       recurrence_from_moments, self_convolutive_moments,
                       stieltjes_resolvent)
from .experiments import (ConvergenceReport, ExperimentSpec, LongtimeReport,
                          MartingaleReport, SweepReport, VerificationSummary,
                          emit_results, longtime_check, martingale_sweep,
                          run_experiment, size_sweep, thread_count,
                          uniform_grid)

__version__ = "0.1.0"

__all__ = [
    "BoundSequence", "BrownianTable", "CLAMP_TOLERANCE", "ConditioningError",
    "ConvergenceReport", "DiscreteMeasure", "EnsembleState", "ExpPolynomial",
    "ExperimentSpec", "HankelReport", "InitialCondition", "IntegrationError",
    "JacobiOperator", "LongtimeReport", "MartingaleReport", "ModelParams",
    "MomentSequence", "MomentTrace", "NoiseStream", "SchemeConfig",
    "SweepReport", "VerificationSummary", "ZeroNoise", "build_jacobi",
    "carleman_diagnostic", "default_time_grid", "density_estimate",
    "drift_lambda", "drift_radial", "emit_results", "empirical_moments",
    "eval_moment", "forcing_term", "hankel_psd_check", "hierarchy_residual",
    "jacobi_moment", "jacobi_moments_exact", "kolmogorov_distance",
    "lambda_bounds", "lambda_from_radial", "limiting_constants",
    "longtime_check", "martingale_qv_target", "martingale_residual",
    "martingale_sweep", "normalize_state", "quadrature_from_jacobi",
    "recurrence_from_moments", "run_experiment", "self_convolutive_moments",
    "simulate_path", "size_sweep", "solve_hierarchy", "stationary_constants",
    "step_lambda", "step_radial", "stieltjes_resolvent", "thread_count",
    "uniform_grid", "validate_params",
]
