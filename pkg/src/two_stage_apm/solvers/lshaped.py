"""Kelley / L-shaped cutting planes with exact cuts from the adapted partition."""
import logging
from typing import Optional, Sequence

from two_stage_apm.geometry import Fan
from two_stage_apm.options import SolverOptions
from two_stage_apm.partition import problem_fans, trivial_partition
from two_stage_apm.recourse import TwoStageProblem, eval_VP, solve_relaxed_master, subgradient_VP
from two_stage_apm.solvers.g2apm import master_with_repair
from two_stage_apm.solvers.state import SolverState, gap_closed

logger = logging.getLogger(__name__)


def lshaped(
    prob: TwoStageProblem,
    eps: Optional[float] = None,
    max_iter: Optional[int] = None,
    options: Optional[SolverOptions] = None,
    fans: Optional[Sequence[Fan]] = None,
    verbose: bool = False,
) -> SolverState:
    """
    Cutting-plane loop on theta >= V(x).

    At each iterate the partition R_{x_k} gives V(x_k) = V_{R_{x_k}}(x_k) and a subgradient of V by solving one
    recourse problem per cell; the cut theta >= g^T x + V(x_k) - g^T x_k is exact at x_k. The relaxed master also
    carries the mean-value bound theta >= Q(x, E[xi]), so the first iterate is the mean-value solution.
    """
    options = options or SolverOptions()
    eps = options.eps if eps is None else eps
    max_iter = options.max_iter if max_iter is None else max_iter
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}.")
    log = logger.info if verbose else logger.debug
    fans = problem_fans(prob, tol=options.tol_geom) if fans is None else fans
    mean_value_stats = trivial_partition(prob.distribution).stats[0]
    state = SolverState(method="lshaped")
    pool = state.cut_pool

    def relaxed_master():
        value, x, _ = solve_relaxed_master(
            prob,
            pool.optimality_cuts,
            pool.feasibility_cuts,
            theta_lower_bound=options.theta_lower_bound,
            mean_value_stats=mean_value_stats,
            options=options,
        )
        return value, x

    while state.k < max_iter:
        state.k += 1
        timings = dict()
        z_lower, x, adapted = master_with_repair(prob, relaxed_master, pool, fans, options, timings)
        theta, duals = eval_VP(prob, x, adapted.stats, options=options)
        g = subgradient_VP(prob, x, adapted.stats, duals)
        pool.add_optimality_cut(g, theta - float(g @ x))

        state.x = x
        state.partition = adapted
        state.update_bounds(z_lower, float(prob.c @ x) + theta, x, tol=10 * options.feasibility_tol)
        state.record(timings, partition_size=len(adapted))
        log(f"lshaped k={state.k}: z_L={state.z_lower:.6f} z_U={state.z_upper:.6f} gap={state.gap:.3g} cuts={len(pool)}")
        if gap_closed(state.z_lower, state.z_upper, eps, options.relative_gap):
            state.converged = True
            break

    if not state.converged:
        logger.warning(f"lshaped stopped at max_iter={max_iter} with gap {state.gap:.6g} > eps={eps}.")
    return state
