"""Principal eigenvalues of periodic-parabolic problems with a degenerate weight,
and the periodic logistic equation they govern."""

from .discretization import Mesh, build_mesh
from .eigen import EigenResult, dense_oracle, principal_eigenpair, richardson_eigenpair
from .logistic import existence_verdict, solve_periodic_logistic, uniqueness_probe
from .perturb import dilated_scenario, sigma_sequence
from .propagator import MonodromyOperator
from .scenario import ScenarioError, ScenarioSpec, load_scenario, parse_scenario, validate_hypotheses
from .sigma import classify_sigma_infinity, find_lambda_pm, sigma_at, sigma_curve
from .zeroset import build_zero_set_graph, make_blocked_weight, tau_path_exists

__version__ = "0.1.0"

__all__ = [
    "Mesh",
    "build_mesh",
    "EigenResult",
    "dense_oracle",
    "principal_eigenpair",
    "richardson_eigenpair",
    "existence_verdict",
    "solve_periodic_logistic",
    "uniqueness_probe",
    "dilated_scenario",
    "sigma_sequence",
    "MonodromyOperator",
    "ScenarioError",
    "ScenarioSpec",
    "load_scenario",
    "parse_scenario",
    "validate_hypotheses",
    "classify_sigma_infinity",
    "find_lambda_pm",
    "sigma_at",
    "sigma_curve",
    "build_zero_set_graph",
    "make_blocked_weight",
    "tau_path_exists",
]
