"""The adaptive partition loop: aggregated master, partition adapted to x_k, common refinement, exact upper bound."""
import logging
from time import perf_counter
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from two_stage_apm.exceptions import NotAdaptedError, RecourseInfeasibleError
from two_stage_apm.geometry import Fan
from two_stage_apm.options import SolverOptions
from two_stage_apm.partition import (
    Partition,
    adapted_partition,
    check_adapted,
    common_refinement,
    problem_fans,
    trivial_partition,
)
from two_stage_apm.recourse import TwoStageProblem, eval_VP, feasibility_cuts, solve_master
from two_stage_apm.solvers.state import CutPool, SolverState, gap_closed

logger = logging.getLogger(__name__)

PartitionHook = Callable[[TwoStageProblem, np.ndarray], Partition]


def master_with_repair(
    prob: TwoStageProblem,
    solve: Callable[[], Tuple[float, np.ndarray]],
    cut_pool: CutPool,
    fans: Sequence[Fan],
    options: SolverOptions,
    timings: Dict[str, float],
    partition_hook: Optional[PartitionHook] = None,
) -> Tuple[float, np.ndarray, Partition]:
    """
    Solve a master problem and build the partition adapted to its solution.

    When the recourse is infeasible at x and feasibility cuts are enabled, the dual-ray cuts are added to
    ``cut_pool`` and the master is solved again, for at most ``options.max_feasibility_cuts`` rounds.
    """
    for _ in range(options.max_feasibility_cuts + 1):
        start = perf_counter()
        z_lower, x = solve()
        timings["master"] = timings.get("master", 0.0) + perf_counter() - start
        start = perf_counter()
        try:
            if partition_hook is None:
                partition = adapted_partition(
                    prob, x, fans, tol=options.tol_geom, min_probability=options.min_cell_probability
                )
            else:
                partition = partition_hook(prob, x)
                if not check_adapted(prob, x, partition, fans, tol=options.tol_geom):
                    raise NotAdaptedError(f"The partition returned by the hook is not adapted to x = {x}.")
            timings["partition"] = timings.get("partition", 0.0) + perf_counter() - start
            return z_lower, x, partition
        except RecourseInfeasibleError:
            if not options.feasibility_cuts:
                raise
            cuts = feasibility_cuts(prob, x, fans, tol=options.tol_geom)
            if not cuts:
                raise
            cut_pool.add_feasibility_cuts(cuts)
            logger.debug(f"Added {len(cuts)} feasibility cuts, {len(cut_pool.feasibility_cuts)} in total.")
    raise RecourseInfeasibleError(
        f"recourse still infeasible after {options.max_feasibility_cuts} rounds of feasibility cuts"
    )


def g2apm(
    prob: TwoStageProblem,
    eps: Optional[float] = None,
    max_iter: Optional[int] = None,
    options: Optional[SolverOptions] = None,
    starting_partition: Optional[Partition] = None,
    partition_hook: Optional[PartitionHook] = None,
    fans: Optional[Sequence[Fan]] = None,
    verbose: bool = False,
) -> SolverState:
    """
    Solve a two-stage problem by adaptive partitions.

    Each iteration solves the master aggregated over P^{k-1}, builds the partition R_{x_k} adapted to the master
    solution, refines P^k = P^{k-1} ∧ R_{x_k} and evaluates the exact upper bound c^T x_k + V_{P^k}(x_k).

    Parameters
    ----------
    prob : TwoStageProblem
    eps : float, optional
        Stopping gap, by default ``options.eps``.
    max_iter : int, optional
        Iteration cap, by default ``options.max_iter``.
    options : SolverOptions, optional
    starting_partition : Partition, optional
        P^0, by default {Xi}.
    partition_hook : callable, optional
        Replaces R_{x_k} by ``partition_hook(prob, x_k)``, which must pass ``check_adapted``.
    fans : list of Fan, optional
        Precomputed normal fans, one per recourse scenario.
    verbose : bool, default: False
        Log one line per iteration at INFO level.

    Returns
    -------
    SolverState
        ``converged`` is False when max_iter was reached first.
    """
    options = options or SolverOptions()
    eps = options.eps if eps is None else eps
    max_iter = options.max_iter if max_iter is None else max_iter
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}.")
    log = logger.info if verbose else logger.debug
    fans = problem_fans(prob, tol=options.tol_geom) if fans is None else fans
    dist = prob.distribution
    state = SolverState(method="g2apm", partition=starting_partition or trivial_partition(dist))

    while state.k < max_iter:
        state.k += 1
        timings = dict()
        previous = state.partition
        z_lower, x, adapted = master_with_repair(
            prob,
            lambda: solve_master(prob, previous.stats, state.cut_pool.feasibility_cuts, options=options),
            state.cut_pool,
            fans,
            options,
            timings,
            partition_hook=partition_hook,
        )

        start = perf_counter()
        refined = common_refinement(
            previous, adapted, dist, min_probability=options.min_cell_probability, tol=options.tol_geom
        )
        timings["refinement"] = perf_counter() - start

        start = perf_counter()
        value, _ = eval_VP(prob, x, refined.stats, options=options)
        timings["upper_bound"] = perf_counter() - start

        state.x = x
        state.partition = refined
        state.update_bounds(z_lower, float(prob.c @ x) + value, x, tol=10 * options.feasibility_tol)
        state.record(timings, partition_size=len(refined))
        log(f"g2apm k={state.k}: z_L={state.z_lower:.6f} z_U={state.z_upper:.6f} gap={state.gap:.3g} |P|={len(refined)}")
        if gap_closed(state.z_lower, state.z_upper, eps, options.relative_gap):
            state.converged = True
            break

    if not state.converged:
        logger.warning(f"g2apm stopped at max_iter={max_iter} with gap {state.gap:.6g} > eps={eps}.")
    return state
