"""diffstiff: differentiable direct-stiffness analysis for bar structures.

Forward analysis (trusses and 3D frames), exact reverse-mode gradients of the
objective/constraint catalog via hand-derived adjoints, and gradient-based
constrained optimization (MMA, projected L-BFGS) with a GA baseline.
"""

from .adjoint import (
    dense_dudK_oracle,
    finite_difference_gradient,
    gradient,
    gradient_many,
)
from .analysis import AnalysisCache, analyze_at, run_analysis
from .functions import (
    ObjectiveSpec,
    all_rows,
    compliance,
    constraint_rows,
    element_forces,
    embodied_carbon,
    evaluate_constraints,
    volume,
)
from .model import (
    ParseError,
    Problem,
    ProblemError,
    UnitError,
    ValidationError,
    apply_variables,
    build_dof_map,
    load_problem,
    problem_from_dict,
)
from .optimize import (
    OptimizationResult,
    OptimizerSettings,
    material_sweep,
    optimize_ga,
    optimize_lbfgs,
    optimize_mma,
)
from .solve import NotPositiveDefiniteError

__version__ = "0.1.0"
