"""Model predictive control with rotated stage costs and contracting terminal sets."""

from .costs import (AugmentedStageCost, QuadStageCost, QuadTerminalCost, augmented_stage_cost,
                    horizon_cost_J, rotated_cost, stage_cost, terminal_cost)
from .errors import (ContractiveMPCError, DareDivergenceError, DegenerateTerminalSetError,
                     DimensionError, IllPosedError, InfeasibleError, NumericOverflowError)
from .mpc import (ClosedLoopResult, MpcConfig, MpcCosts, MpcIterate, assert_feasibility_chain,
                  run_closed_loop, running_cost, solve_online, update_alpha)
from .optim import NlpProblem, SolveReport, SolverSettings, max_min_eigenvalue, minimize
from .osvf import (BlockMatrixM, ClfCertificate, OneStepProblem, OsvfQuadratic, TerminalSet,
                   assemble_M, is_M_positive_definite, osvf_eval, osvf_matrix,
                   schur_positive_definite, sublevel_membership, verify_clf)
from .systems import (BoxSet, CartSpringSystem, DiscreteSystem, FunctionSystem, LinearSystem,
                      box_contains, linearize, rollout, step)

__version__ = "0.1.0"

__all__ = [
    "AugmentedStageCost",
    "QuadStageCost",
    "QuadTerminalCost",
    "augmented_stage_cost",
    "horizon_cost_J",
    "rotated_cost",
    "stage_cost",
    "terminal_cost",
    "ContractiveMPCError",
    "DareDivergenceError",
    "DegenerateTerminalSetError",
    "DimensionError",
    "IllPosedError",
    "InfeasibleError",
    "NumericOverflowError",
    "ClosedLoopResult",
    "MpcConfig",
    "MpcCosts",
    "MpcIterate",
    "assert_feasibility_chain",
    "run_closed_loop",
    "running_cost",
    "solve_online",
    "update_alpha",
    "NlpProblem",
    "SolveReport",
    "SolverSettings",
    "max_min_eigenvalue",
    "minimize",
    "BlockMatrixM",
    "ClfCertificate",
    "OneStepProblem",
    "OsvfQuadratic",
    "TerminalSet",
    "assemble_M",
    "is_M_positive_definite",
    "osvf_eval",
    "osvf_matrix",
    "schur_positive_definite",
    "sublevel_membership",
    "verify_clf",
    "BoxSet",
    "CartSpringSystem",
    "DiscreteSystem",
    "FunctionSystem",
    "LinearSystem",
    "box_contains",
    "linearize",
    "rollout",
    "step",
]
