"""High-order DG/FV solver for hyperbolic conservation laws with a unified
positivity/entropy/oscillation scaling limiter."""

from .budgets import (CflReport, MultistepCoefficients, SSP_MS3, SSPRK33,
                      SspCoefficients, budget_slack, cfl_check, h_alpha,
                      lf_flux, multistep_budget, numerical_entropy_flux,
                      ssprk_stage_budget, weak_budget_forward_euler)
from .discretization import (DGOperator, Mesh1D, candidate_average_update,
                             cell_average, evaluate_polynomial,
                             nodal_rule_for_degree)
from .errors import (BudgetBelowAverageEntropy, CflViolation, ConfigError,
                     InvariantViolation, NumericalFailure,
                     WeakPositivityViolated)
from .limiter import (CosConfig, LimiterToggles, OscillationSet,
                      RadiusBreakdown, affine_geometric_radius, apply_scaling,
                      cos_coefficient, cos_distance, entropy_deviation_gauge,
                      entropy_profile, epo_radius, gauge_oscillation_radius,
                      geometric_radius, limit_cell, local_cos_marker,
                      positivity_first_entropy_radius,
                      quadratic_entropy_radius)
from .physics import (AdmissibleSet, EntropyPair, EulerParams,
                      euler_admissible_set, euler_entropy_pair, euler_model,
                      euler_max_wave_speed, euler_pressure,
                      euler_primitive_to_conservative,
                      euler_conservative_to_primitive,
                      euler_scaled_entropy_pair, interval_admissible_set,
                      quadratic_vector_pair, scalar_model,
                      scalar_quadratic_pair, scalar_quartic_pair)
from .quadrature import QuadratureRule, gauss_lobatto_rule, gauss_rule
from .scenarios import (build_problem, error_norms, exact_smooth_solution,
                        global_entropy, observed_orders, scenario_catalog,
                        scenario_names)
from .timestepping import (HistoryRing, IntegratorConfig, SimResult,
                           StepRecord, Stepper, compute_dt, simulate)

__version__ = "0.1.0"
