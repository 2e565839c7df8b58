"""Recourse values and duals, the aggregated master problem and the aggregated expected cost-to-go V_P."""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from two_stage_apm.exceptions import (
    MasterInfeasibleError,
    MasterUnboundedError,
    RecourseInfeasibleError,
    StructuralError,
)
from two_stage_apm.measure import CellStats, DiscreteAtoms, UniformBox
from two_stage_apm.options import SolverOptions
from two_stage_apm.recourse.linear_programs import LPResult, solve_lp
from two_stage_apm.recourse.problem import TwoStageProblem

logger = logging.getLogger(__name__)

Cut = Tuple[np.ndarray, float]


def _lp_tolerances(options: Optional[SolverOptions]) -> dict:
    options = options or SolverOptions()
    return dict(feasibility_tol=options.feasibility_tol, optimality_tol=options.optimality_tol)


def _farkas_ray(W: np.ndarray, rhs: np.ndarray, options: Optional[SolverOptions] = None) -> np.ndarray:
    """sigma with W^T sigma <= 0 and rhs^T sigma > 0, a certificate that W y = rhs has no solution y >= 0."""
    result = solve_lp(
        c=-rhs, A_ub=W.T, b_ub=np.zeros(W.shape[1]), bounds=(-1.0, 1.0), **_lp_tolerances(options)
    )
    return result.primal


def solve_recourse(
    prob: TwoStageProblem,
    x: np.ndarray,
    T: np.ndarray,
    h: np.ndarray,
    scenario: int = 0,
    options: Optional[SolverOptions] = None,
) -> LPResult:
    """
    Q(x, (T, h)) = min { q^T y : W y = h - T x, y >= 0 } for one recourse scenario.

    On optimality ``dual`` is the optimal lambda in D = {W^T lambda <= q}. On infeasibility ``ray`` is a dual ray
    sigma with W^T sigma <= 0 and (h - T x)^T sigma > 0.
    """
    recourse = prob.scenarios[scenario]
    rhs = np.asarray(h, dtype=float) - np.asarray(T, dtype=float) @ np.asarray(x, dtype=float)
    result = solve_lp(c=recourse.q, A_eq=recourse.W, b_eq=rhs, bounds=(0, None), **_lp_tolerances(options))
    if result.status == "infeasible":
        return LPResult(status=result.status, value=result.value, ray=_farkas_ray(recourse.W, rhs, options))
    return result


def _aggregated_blocks(prob: TwoStageProblem, partition_stats: Sequence[CellStats]):
    """Stacked E[T|P] rows, block-diagonal W, stacked E[h|P] and the probability-weighted costs of every y block."""
    T_rows, W_blocks, h_rows, costs = [], [], [], []
    for index, stats in enumerate(partition_stats):
        if not stats.defined:
            raise StructuralError(f"Cell {index} has probability {stats.prob}; the master needs positive cells.")
        for recourse in prob.scenarios:
            T_rows.append(stats.mean_T)
            W_blocks.append(recourse.W)
            h_rows.append(stats.mean_h)
            costs.append(stats.prob * recourse.weight * recourse.q)
    return (
        sparse.csr_matrix(np.vstack(T_rows)),
        sparse.block_diag(W_blocks, format="csr"),
        np.concatenate(h_rows),
        np.concatenate(costs),
    )


def _cut_rows(cuts: Sequence[Cut], num_columns: int) -> Tuple[sparse.csr_matrix, np.ndarray]:
    if not cuts:
        return sparse.csr_matrix((0, num_columns)), np.zeros(0)
    F = np.vstack([f for f, _ in cuts])
    padding = sparse.csr_matrix((F.shape[0], num_columns - F.shape[1]))
    return sparse.hstack([sparse.csr_matrix(F), padding], format="csr"), np.array([f_bar for _, f_bar in cuts])


def _improving_ray(c: np.ndarray, A_eq, A_ub, options: Optional[SolverOptions]) -> Optional[np.ndarray]:
    """A direction d >= 0 with A_eq d = 0, A_ub d <= 0 and c^T d < 0, normalized to sum(d) = 1."""
    num_columns = c.shape[0]
    normalization = sparse.csr_matrix(np.ones((1, num_columns)))
    A_ub = normalization if A_ub is None or A_ub.shape[0] == 0 else sparse.vstack([A_ub, normalization], format="csr")
    b_ub = np.zeros(A_ub.shape[0])
    b_ub[-1] = 1.0
    b_eq = None if A_eq is None else np.zeros(A_eq.shape[0])
    result = solve_lp(c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, **_lp_tolerances(options))
    if result.optimal and result.value < 0.0:
        return result.primal
    return None


def solve_master(
    prob: TwoStageProblem,
    partition_stats: Sequence[CellStats],
    feasibility_cuts: Sequence[Cut] = (),
    options: Optional[SolverOptions] = None,
) -> Tuple[float, np.ndarray]:
    """
    The aggregated extensive LP over a partition.

    min c^T x + sum_P sum_s P[P] weight_s q_s^T y_{P,s}
    s.t. A x = b, E[T|P] x + W_s y_{P,s} = E[h|P], f^T x <= f_bar for every feasibility cut, x, y >= 0.

    Returns
    -------
    z_L : float
        The optimal value, a lower bound of the two-stage problem.
    x : np.ndarray
        An optimal first stage, as returned by the LP backend.
    """
    num_first_stage = prob.num_first_stage
    T_block, W_block, rhs, costs = _aggregated_blocks(prob, partition_stats)
    num_y = W_block.shape[1]
    A_eq = sparse.vstack(
        [
            sparse.hstack([sparse.csr_matrix(prob.A), sparse.csr_matrix((prob.A.shape[0], num_y))]),
            sparse.hstack([T_block, W_block]),
        ],
        format="csr",
    )
    b_eq = np.concatenate([prob.b, rhs])
    c_full = np.concatenate([prob.c, costs])
    A_ub, b_ub = _cut_rows(feasibility_cuts, num_first_stage + num_y)
    result = solve_lp(c=c_full, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, **_lp_tolerances(options))
    if result.status == "infeasible":
        raise MasterInfeasibleError()
    if result.status == "unbounded":
        ray = _improving_ray(c_full, A_eq, A_ub, options)
        raise MasterUnboundedError(
            f"The aggregated master over {len(partition_stats)} cells is unbounded.",
            ray=None if ray is None else ray[:num_first_stage],
        )
    return result.value, result.primal[:num_first_stage]


def eval_VP(
    prob: TwoStageProblem,
    x: np.ndarray,
    partition_stats: Sequence[CellStats],
    options: Optional[SolverOptions] = None,
) -> Tuple[float, List[List[np.ndarray]]]:
    """
    V_P(x) = sum_P P[P] sum_s weight_s Q_s(x, E[xi|P]).

    Returns
    -------
    value : float
    duals : list
        ``duals[cell][scenario]`` is the optimal dual of that cell's recourse problem.

    Raises
    ------
    RecourseInfeasibleError
        For the first cell whose recourse problem is infeasible at x.
    """
    value = 0.0
    duals = []
    for index, stats in enumerate(partition_stats):
        cell_duals = []
        for scenario, recourse in enumerate(prob.scenarios):
            result = solve_recourse(prob, x, stats.mean_T, stats.mean_h, scenario=scenario, options=options)
            if not result.optimal:
                raise RecourseInfeasibleError(
                    f"recourse infeasible in cell {index} (scenario {scenario})",
                    region=dict(cell=index, scenario=scenario, probability=stats.prob),
                    ray=result.ray,
                )
            value += stats.prob * recourse.weight * result.value
            cell_duals.append(result.dual)
        duals.append(cell_duals)
    return value, duals


def subgradient_VP(
    prob: TwoStageProblem,
    x: np.ndarray,
    partition_stats: Sequence[CellStats],
    duals: Optional[Sequence[Sequence[np.ndarray]]],
) -> np.ndarray:
    """g = sum_P P[P] sum_s weight_s (-E[T|P]^T lambda_{P,s})."""
    if duals is None or len(duals) != len(partition_stats):
        raise StructuralError("subgradient_VP needs the duals of eval_VP, one list per cell.")
    g = np.zeros(prob.num_first_stage)
    for stats, cell_duals in zip(partition_stats, duals):
        if len(cell_duals) != len(prob.scenarios):
            raise StructuralError(f"Expected {len(prob.scenarios)} duals per cell, got {len(cell_duals)}.")
        for recourse, dual in zip(prob.scenarios, cell_duals):
            g -= stats.prob * recourse.weight * (stats.mean_T.T @ dual)
    return g


def _require_atoms(prob: TwoStageProblem) -> DiscreteAtoms:
    if not isinstance(prob.distribution, DiscreteAtoms):
        raise StructuralError(f"{prob.name} does not have a finitely supported law.")
    return prob.distribution


def atom_stats(dist: DiscreteAtoms) -> List[CellStats]:
    """One singleton cell per atom of positive weight."""
    return [
        CellStats(prob=float(weight), mean_T=dist.T[atom], mean_h=dist.h[atom])
        for atom, weight in enumerate(dist.weights)
        if weight > 0.0
    ]


def expected_recourse(prob: TwoStageProblem, x: np.ndarray, options: Optional[SolverOptions] = None) -> float:
    """V(x) = E[Q(x, xi)] by enumeration of the atoms of a discrete law."""
    value, _ = eval_VP(prob, x, atom_stats(_require_atoms(prob)), options=options)
    return value


def extensive_form(prob: TwoStageProblem, options: Optional[SolverOptions] = None) -> Tuple[float, np.ndarray]:
    """The monolithic extensive-form LP of a problem with a finitely supported law."""
    return solve_master(prob, atom_stats(_require_atoms(prob)), options=options)


def solve_relaxed_master(
    prob: TwoStageProblem,
    optimality_cuts: Sequence[Cut],
    feasibility_cuts: Sequence[Cut] = (),
    theta_lower_bound: float = -1e6,
    mean_value_stats: Optional[CellStats] = None,
    options: Optional[SolverOptions] = None,
) -> Tuple[float, np.ndarray, float]:
    """
    The cutting-plane master over (x, theta).

    min c^T x + theta
    s.t. A x = b, g^T x + v <= theta for every optimality cut, f^T x <= f_bar for every feasibility cut,
         theta >= theta_lower_bound, x >= 0.

    With ``mean_value_stats`` the Jensen bound theta >= sum_s weight_s Q_s(x, E[xi]) is added through one y block per
    recourse scenario, which keeps the master bounded wherever the mean-value problem is.
    """
    num_first_stage = prob.num_first_stage
    blocks_eq, rhs_eq, blocks_ub, rhs_ub = [], [], [], []
    num_y = 0
    costs = np.zeros(0)
    if mean_value_stats is not None:
        T_block, W_block, rhs, costs = _aggregated_blocks(prob, [mean_value_stats])
        costs = costs / mean_value_stats.prob
        num_y = W_block.shape[1]
    num_columns = num_first_stage + 1 + num_y

    blocks_eq.append(sparse.hstack([sparse.csr_matrix(prob.A), sparse.csr_matrix((prob.A.shape[0], 1 + num_y))]))
    rhs_eq.append(prob.b)
    if mean_value_stats is not None:
        blocks_eq.append(sparse.hstack([T_block, sparse.csr_matrix((T_block.shape[0], 1)), W_block]))
        rhs_eq.append(rhs)
        jensen = np.concatenate([np.zeros(num_first_stage), [-1.0], costs])
        blocks_ub.append(sparse.csr_matrix(jensen[None, :]))
        rhs_ub.append(np.zeros(1))
    for g, v in optimality_cuts:
        row = np.zeros(num_columns)
        row[:num_first_stage] = g
        row[num_first_stage] = -1.0
        blocks_ub.append(sparse.csr_matrix(row[None, :]))
        rhs_ub.append(np.array([-v]))
    cut_rows, cut_rhs = _cut_rows(feasibility_cuts, num_columns)
    blocks_ub.append(cut_rows)
    rhs_ub.append(cut_rhs)

    A_eq = sparse.vstack(blocks_eq, format="csr")
    A_ub = sparse.vstack(blocks_ub, format="csr")
    c_full = np.concatenate([prob.c, [1.0], np.zeros(num_y)])
    bounds = [(0, None)] * num_first_stage + [(theta_lower_bound, None)] + [(0, None)] * num_y
    result = solve_lp(
        c=c_full,
        A_ub=A_ub,
        b_ub=np.concatenate(rhs_ub),
        A_eq=A_eq,
        b_eq=np.concatenate(rhs_eq),
        bounds=bounds,
        **_lp_tolerances(options),
    )
    if result.status == "infeasible":
        raise MasterInfeasibleError()
    if result.status == "unbounded":
        raise MasterUnboundedError(
            f"The relaxed master with {len(optimality_cuts)} optimality cuts is unbounded; "
            f"bound the first stage or start from a bounded mean-value problem."
        )
    return result.value, result.primal[:num_first_stage], float(result.primal[num_first_stage])


def _worst_scenarios(prob: TwoStageProblem, x: np.ndarray, g: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
    """The scenarios (T, h) of the support maximizing g^T (h - T x): the violating atoms, or the worst box corner."""
    dist = prob.distribution
    if isinstance(dist, DiscreteAtoms):
        values = (dist.h - dist.T @ x) @ g
        atoms = np.flatnonzero((dist.weights > 0.0) & (values > 0.0))
        if atoms.size == 0:
            return []
        worst = atoms[np.argmax(values[atoms])]
        return [(dist.T[worst], dist.h[worst])]
    if isinstance(dist, UniformBox):
        coefficients = dist.flatten(-np.outer(g, x), g)
        corner = np.where(coefficients > 0.0, dist.upper, dist.lower)
        return [dist.unflatten(corner)]
    raise StructuralError(f"Feasibility cuts are not available for {dist!r}.")


def feasibility_cuts(
    prob: TwoStageProblem,
    x: np.ndarray,
    fans: Sequence,
    tol: Optional[float] = None,
) -> List[Cut]:
    """
    Cuts f^T x <= f_bar excluding x when h - T x leaves pos(W_s) on a positive-probability region.

    pos(W_s) is the coverage of the normal fan of D_s; each violated facet row g of the coverage at the worst scenario
    (T, h) gives g^T (h - T x) <= 0, i.e. f = -T^T g and f_bar = -g^T h.
    """
    tol = SolverOptions().tol_geom if tol is None else tol
    x = np.asarray(x, dtype=float)
    cuts = []
    for fan in fans:
        coverage = fan.coverage
        rows = [coverage.A[row] for row in coverage.inequality_rows]
        rows += [sign * coverage.A[row] for row in coverage.equality_rows for sign in (1.0, -1.0)]
        for g in rows:
            for T, h in _worst_scenarios(prob, x, g):
                violation = g @ (h - T @ x)
                scale = 1.0 + abs(g @ h) + np.linalg.norm(T.T @ g) * np.linalg.norm(x)
                if violation > tol * scale:
                    cuts.append((-(T.T @ g), float(-(g @ h))))
    logger.debug(f"{len(cuts)} feasibility cuts at x = {x}.")
    return cuts
