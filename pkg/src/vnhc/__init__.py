"""Virtual nonholonomic constraint synthesis.

Given a mechanical control system and an affine velocity constraint,
compute the unique feedback law that keeps the constraint set invariant
under the closed-loop flow, simulate it, and certify the invariance.
"""

from .constraint import (
    AffineConstraint,
    RankDefectError,
    RankReport,
    TransversalityReport,
    project_onto_A,
    transversality_check,
)
from .control import (
    ControlSolve,
    TransversalityError,
    b_vector,
    closed_loop_acceleration,
    p_matrix,
    solve_control,
    tau_star,
)
from .expr import (
    EvalError,
    Expr,
    ExprError,
    ParseError,
    as_expr,
    diff,
    evaluate,
    free_symbols,
    parse,
    to_string,
)
from .geometry import MechanicalModel, ModelError, SPDError, State
from .model_io import ModelFileError, load_model, model_to_dict, save_model
from .models import FIXTURE_CURRENTS, build_boat, build_linear_fixture
from .sim import IntegrationError, Trajectory, integrate, rk4_step

__all__ = [
    "AffineConstraint",
    "ControlSolve",
    "EvalError",
    "Expr",
    "ExprError",
    "FIXTURE_CURRENTS",
    "IntegrationError",
    "MechanicalModel",
    "ModelError",
    "ModelFileError",
    "ParseError",
    "RankDefectError",
    "RankReport",
    "SPDError",
    "State",
    "Trajectory",
    "TransversalityError",
    "TransversalityReport",
    "as_expr",
    "b_vector",
    "build_boat",
    "build_linear_fixture",
    "closed_loop_acceleration",
    "diff",
    "evaluate",
    "free_symbols",
    "integrate",
    "load_model",
    "model_to_dict",
    "p_matrix",
    "parse",
    "project_onto_A",
    "rk4_step",
    "save_model",
    "solve_control",
    "tau_star",
    "to_string",
    "transversality_check",
]

__version__ = "0.1.0"
