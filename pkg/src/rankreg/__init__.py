"""Group-lasso regularized rank regression.

A robust high-dimensional regression toolkit: the Wilcoxon rank loss
with a group lasso penalty, a simulation-based tuning-free choice of
the regularization level, and an augmented Lagrangian solver whose
subproblems are handled by a semismooth Newton method that exploits
the low-rank structure of the generalized Hessian.
"""

from .model import (GroupStructure, ProblemData, SolverOptions, Solution,
                    validate_problem)
from .rank_loss import (rho_weights, eval_rank_loss, project_monotone,
                        prox_rank_loss, jacobian_rank_apply, MonotoneBlocks)
from .group_reg import (eval_group_norm, dual_norm, project_l2_ball,
                        prox_group, jacobian_group_apply, ActiveGroups)
from .lambda_rule import LambdaConfig, simulate_Sn, select_lambda
from .palm import palm_solve, kkt_residual, objectives
from .ssn import Subproblem, eval_psi, grad_psi, ssn_solve

__version__ = "0.1.0"

__all__ = [
    "GroupStructure", "ProblemData", "SolverOptions", "Solution",
    "validate_problem",
    "rho_weights", "eval_rank_loss", "project_monotone", "prox_rank_loss",
    "jacobian_rank_apply", "MonotoneBlocks",
    "eval_group_norm", "dual_norm", "project_l2_ball", "prox_group",
    "jacobian_group_apply", "ActiveGroups",
    "LambdaConfig", "simulate_Sn", "select_lambda",
    "palm_solve", "kkt_residual", "objectives",
    "Subproblem", "eval_psi", "grad_psi", "ssn_solve",
]
