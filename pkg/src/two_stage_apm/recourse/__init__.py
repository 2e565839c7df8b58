from .linear_programs import LPResult, solve_lp
from .problem import RecourseScenario, TwoStageProblem
from .recourse import (
    atom_stats,
    eval_VP,
    expected_recourse,
    extensive_form,
    feasibility_cuts,
    solve_master,
    solve_recourse,
    solve_relaxed_master,
    subgradient_VP,
)
