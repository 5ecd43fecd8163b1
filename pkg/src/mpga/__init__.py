"""Multi-proximity gradient solvers for single-ratio fractional programs."""
from .criticality import StoppingRule, dist_subdiff_Q_l1l2, fixed_point_residual, rel_err
from .extended import NEG_INF, POS_INF, ExtReal
from .instances import Instance, init_point, load_instance, make_l1l2_instance, make_l1sk_instance, save_instance
from .models import KNorm, L1Box, L2Norm, LeastSquares, ScaledLeastSquares, l1l2_problem, l1sk_problem
from .problem import BlockPartition, FractionalProblem, eval_eta, eval_F, eval_Q, eval_zeta, initial_dual
from .prox import BoxBounds, brute_prox_oracle, project_l2_ball, prox_conj_via_moreau, prox_knorm, prox_l1_box
from .solver import Schedule, SolveReport, SolverConfig, Termination, solve

__version__ = "0.1.0"
