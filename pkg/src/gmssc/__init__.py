"""Online generalized min-sum set cover via projected gradient descent and rounding."""

from .baselines import BaselineResult, brute_force_opt, flt_greedy, mwu_permutations, random_perm_baseline
from .costs import Configuration, config_cost, enumerate_configs, fac_value, sw_cost, sw_cost_closed
from .errors import (
    DeskScaleError,
    DimensionError,
    GMSSCError,
    InfeasibleMatrixError,
    InstanceFormatError,
    InvalidRequestError,
    SolverError,
    WrongDemandError,
)
from .model import (
    DSMatrix,
    Instance,
    Permutation,
    Request,
    access_cost,
    access_cost_matrix_form,
    matrix_to_perm,
    parse_instance,
    perm_to_matrix,
    serialize_instance,
)
from .opgd import OnlineLearner, OPGDState, RoundTrace, StepRule, opgd_init, opgd_step, run_online
from .projection import ProjectionConfig, project_birkhoff, simplex_project
from .rounding_det import BlockSolver, dp_solve, round_deterministic
from .rounding_rand import GMSSC_PARAMS, MSSC_PARAMS, RoundingParams, double_matrix, round_randomized
from .subgradient import SubgradientMatrix, fac_subgradient_exact, sw_subgradient_k1

__version__ = "0.1.0"
