"""Gradient-free optimization for problems with very many black-box
inequality constraints.

The solver reformulates `min f0(w) s.t. f_j(w) <= 0, j < m` as a penalized
minimax problem over a learned distribution p on the constraints, and runs
doubly stochastic zeroth-order descent/ascent: per iteration it touches
only a sampled handful of constraints instead of all m.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .baselines import Box, FeasibleSet, Simplex, full_batch_gda_solve, zopsgd_solve
from .metrics import (
    HiAcc,
    StationarityReport,
    feasibility_residuals,
    minimax_residuals,
    recover_multipliers,
    stationarity_report,
)
from .problems import (
    AnalyticCase,
    Dataset,
    SplitSpec,
    accuracy,
    build_analytic_suite,
    build_fairness_problem,
    build_pairwise_problem,
    fairness_box_radius,
    generate_fairness_dataset,
    split,
)
from .simplex import CategoricalSampler, argmax_concave_p, project_simplex, sample_categorical
from .solver import SolveOutcome, adaptive_step, dszog_solve, ema_update
from .types import (
    BlackBoxProblem,
    ConfigError,
    ContractError,
    DataError,
    DszogConfig,
    DszogError,
    DszogState,
    NumericalError,
    ParseError,
    RecordRow,
    RunRecord,
    SimplexPoint,
    Termination,
    validate_config,
)
from .zo_grad import (
    GaussianDirections,
    PGradEstimate,
    WGradEstimate,
    draw_directions,
    penalty_value,
    stoch_grad_p,
    zo_full_grad_w,
    zo_objective_grad,
    zo_penalty_grad,
    zo_weighted_penalty_grad,
)

__version__ = "0.1.0"
