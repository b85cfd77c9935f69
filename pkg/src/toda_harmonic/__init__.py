"""Maximal solutions of a coupled Toda-type curvature system on the disk.

The package computes bounded solutions of

    L u_i + i(n - i) - k_i exp(2 u_i - u_{i-1} - u_{i+1}) = 0,   u_0 = u_n = 0,

for the hyperbolic Laplacian L on disks |z| < r < 1, drives them through an
exhaustion of the unit disk to the maximal solution, and evaluates the
metric quantities attached to the limit.
"""

from .grid import PolarGrid, ScalarField
from .higgs import (
    HiggsData,
    MetricSolution,
    bergman_integral,
    blaschke,
    coefficients_from_higgs,
    detline_densities,
    fuchsian_data,
    higgs_norm,
    metric_from_state,
    norm_bound,
    pullback_density,
    pullback_ratio,
    weak_domination,
)
from .operators import (
    EigenSolveError,
    apply_laplacian,
    assemble_operator,
    first_eigenpair,
    laplace_beltrami,
    metric_density,
    torsion_function,
)
from .pipeline import (
    ExhaustionPlan,
    PipelineTrace,
    admissible_radii,
    domination_dichotomy,
    maximal_on_domain,
    maximal_solution,
    maximality_probe,
)
from .solver import (
    BlowupSchedule,
    ConsistencyError,
    DirichletProblem,
    IterationBudgetError,
    LinearSolveError,
    SolverReport,
    eigen_supersolution,
    solve_blowup,
    solve_dirichlet,
    torsion_supersolution,
)
from .system import (
    CouplingMatrixField,
    CouplingReport,
    ExponentOverflowError,
    TodaCoefficients,
    TodaState,
    bubble_coefficients,
    bubble_value,
    classify,
    constant_subsolution,
    exact_bubble,
    growth_weights,
    interaction_exponents,
    linearized_coupling,
    load_fields,
    residual,
    save_fields,
    validate_coupling,
)
from .verify import run_criteria, run_criterion, summary_table

__version__ = "0.1.0"

__all__ = [
    "BlowupSchedule",
    "ConsistencyError",
    "CouplingMatrixField",
    "CouplingReport",
    "DirichletProblem",
    "EigenSolveError",
    "ExhaustionPlan",
    "ExponentOverflowError",
    "HiggsData",
    "IterationBudgetError",
    "LinearSolveError",
    "MetricSolution",
    "PipelineTrace",
    "PolarGrid",
    "ScalarField",
    "SolverReport",
    "TodaCoefficients",
    "TodaState",
    "admissible_radii",
    "apply_laplacian",
    "assemble_operator",
    "bergman_integral",
    "blaschke",
    "bubble_coefficients",
    "bubble_value",
    "classify",
    "coefficients_from_higgs",
    "constant_subsolution",
    "detline_densities",
    "domination_dichotomy",
    "eigen_supersolution",
    "exact_bubble",
    "first_eigenpair",
    "fuchsian_data",
    "growth_weights",
    "higgs_norm",
    "interaction_exponents",
    "laplace_beltrami",
    "linearized_coupling",
    "load_fields",
    "maximal_on_domain",
    "maximal_solution",
    "maximality_probe",
    "metric_density",
    "metric_from_state",
    "norm_bound",
    "pullback_density",
    "pullback_ratio",
    "residual",
    "run_criteria",
    "run_criterion",
    "save_fields",
    "solve_blowup",
    "solve_dirichlet",
    "summary_table",
    "torsion_function",
    "torsion_supersolution",
    "validate_coupling",
    "weak_domination",
]
