"""The partition R_x adapted to a first-stage decision x, built from the normal fans of the dual sets."""
import hashlib
import logging
from collections import defaultdict
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from two_stage_apm.exceptions import RecourseInfeasibleError, StructuralError
from two_stage_apm.geometry import TOL_GEOM, Cone, Fan, HRep, classify_point, h_to_v, intersect, normal_fan
from two_stage_apm.geometry.normal_fan import optimal_vertex_mask
from two_stage_apm.measure import DiscreteAtoms, UniformBox, XiDistribution
from two_stage_apm.partition.cells import MASS_TOL, Cell, Partition, common_refinement
from two_stage_apm.recourse import TwoStageProblem

logger = logging.getLogger(__name__)

ROUTES = ("auto", "translation", "lifting")


def decision_label(x: np.ndarray) -> str:
    """A short stable label of the exact bytes of x, used in cell lineage."""
    return hashlib.sha1(np.ascontiguousarray(x, dtype=float).tobytes()).hexdigest()[:12]


def problem_fans(prob: TwoStageProblem, tol: float = TOL_GEOM) -> List[Fan]:
    """One normal fan per recourse scenario."""
    return [normal_fan(scenario.dual_set, tol=tol) for scenario in prob.scenarios]


def _restrict_to_random(
    dist: XiDistribution,
    A_full: np.ndarray,
    b_full: np.ndarray,
    eqs: FrozenSet[int],
    tol: float,
) -> Optional[Tuple[HRep, FrozenSet[int]]]:
    """
    Substitute the constant coordinates of xi into rows over the flat space.

    Rows left without random coefficients are checked against their right-hand side: a violated one makes the cell
    empty (None), a satisfied one is dropped. Inequality rows are strict, equalities stay equalities.
    """
    random_mask = dist.random_mask
    fixed = dist.fixed_values
    row_scale = np.maximum(1.0, np.abs(A_full).max(axis=1)) if A_full.size else np.ones(0)
    A = A_full[:, random_mask].copy()
    A[np.abs(A) <= tol * row_scale[:, None]] = 0.0
    b = b_full - A_full[:, ~random_mask] @ fixed[~random_mask]
    norms = np.linalg.norm(A, axis=1)
    check_scale = 1.0 + np.abs(A_full[:, ~random_mask]) @ np.abs(fixed[~random_mask]) + np.abs(b_full)
    kept, kept_eqs = [], []
    for row in range(A.shape[0]):
        if norms[row] > 0.0:
            if row in eqs:
                kept_eqs.append(len(kept))
            kept.append(row)
            continue
        if row in eqs:
            if abs(b[row]) > tol * check_scale[row]:
                return None
        elif b[row] <= tol * check_scale[row]:
            return None
    kept = np.array(kept, dtype=int)
    geom = HRep(
        A=A[kept] / norms[kept, None] if kept.size else np.zeros((0, dist.num_random)),
        b=b[kept] / norms[kept] if kept.size else np.zeros(0),
        eqs=frozenset(kept_eqs),
        ambient_dim=dist.num_random,
    )
    strict_rows = frozenset(row for row in range(geom.num_rows) if row not in geom.eqs)
    return geom, strict_rows


def cone_cell(
    dist: XiDistribution,
    cone: Cone,
    x: np.ndarray,
    route: str = "auto",
    tol: float = TOL_GEOM,
) -> Optional[Tuple[HRep, FrozenSet[int]]]:
    """
    E_{N,x} = {xi : h - T x in ri(N)} over the random coordinates, as (closure, strict rows), or None when empty.

    With the cone written M psi <= 0 (and equality rows), the translation route (fixed T) uses M h <= M T x; the
    lifting route applies the rows of H^x = (-x_1 M ... -x_n M, M) to the flat (vec(T), h), laid out row-major.
    """
    if route not in ROUTES:
        raise StructuralError(f"Unknown route '{route}', expected one of {ROUTES}.")
    if route == "auto":
        route = "translation" if dist.fixed_technology else "lifting"
    x = np.asarray(x, dtype=float)
    M = cone.hrep.A
    num_rows, num_cols = dist.num_rows, dist.num_cols
    A_full = np.zeros((M.shape[0], dist.flat_dim))
    A_full[:, num_rows * num_cols :] = M
    if route == "translation":
        if not dist.fixed_technology:
            raise StructuralError("The translation route needs a fixed technology matrix.")
        T, _ = dist.total_mean()
        b_full = M @ (T @ x)
    else:
        A_full[:, : num_rows * num_cols] = -np.einsum("ki,j->kij", M, x).reshape(M.shape[0], -1)
        b_full = np.zeros(M.shape[0])
    return _restrict_to_random(dist, A_full, b_full, cone.hrep.eqs, tol)


def _combine(
    dist: XiDistribution, pieces: Sequence[Tuple[HRep, FrozenSet[int]]]
) -> Tuple[HRep, FrozenSet[int]]:
    geom = HRep.full_space(dist.num_random)
    strict_rows = frozenset()
    for piece, piece_strict in pieces:
        strict_rows = strict_rows | frozenset(row + geom.num_rows for row in piece_strict)
        geom = intersect(geom, piece)
    return geom, strict_rows


def _atoms_adapted_partition(
    prob: TwoStageProblem, x: np.ndarray, fans: Sequence[Fan], tol: float
) -> Partition:
    """Atoms grouped by the cones classifying h - T x for every recourse scenario."""
    dist: DiscreteAtoms = prob.distribution
    label = decision_label(x)
    psi = dist.h - dist.T @ x
    groups: Dict[Tuple[int, ...], List[int]] = defaultdict(list)
    outside = defaultdict(list)
    for atom in np.flatnonzero(dist.weights > 0.0):
        key = []
        for scenario, fan in enumerate(fans):
            index = classify_point(fan, psi[atom], tol=tol)
            if index is None:
                outside[scenario].append(int(atom))
            key.append(index)
        groups[tuple(key)].append(int(atom))
    if outside:
        scenario, atoms = next(iter(outside.items()))
        raise RecourseInfeasibleError(
            f"recourse infeasible at x for atoms {atoms} of scenario {scenario}",
            region=dict(scenario=scenario, atoms=atoms, probability=float(dist.weights[atoms].sum())),
        )

    cells = []
    for key in sorted(groups):
        members = frozenset(groups[key])
        pieces = []
        for scenario, index in enumerate(key):
            piece = cone_cell(dist, fans[scenario].cones[index], x, tol=tol)
            if piece is None:
                # the atoms were classified by face signature, whose tolerance is looser than the substitution check
                logger.debug(f"Empty cone cell for atoms {sorted(members)}; keeping them by classification.")
                continue
            pieces.append(piece)
        geom, strict_rows = _combine(dist, pieces)
        cells.append(
            Cell(
                geom=geom,
                stats=dist.cell_stats(geom, strict_rows=strict_rows, members=members),
                strict_rows=strict_rows,
                origin=tuple((label, scenario, fans[scenario].cones[index].face_id) for scenario, index in enumerate(key)),
                members=members,
            )
        )
    return Partition(cells=tuple(cells))


def _scenario_adapted_partition(
    prob: TwoStageProblem,
    x: np.ndarray,
    scenario: int,
    fan: Fan,
    tol: float,
    min_probability: float,
) -> Partition:
    dist = prob.distribution
    label = decision_label(x)
    cells = []
    for cone in fan.cones:
        piece = cone_cell(dist, cone, x, tol=tol)
        if piece is None:
            continue
        geom, strict_rows = piece
        if geom.eqs:
            # a nontrivial equality carries no mass under a continuous law
            continue
        stats = dist.cell_stats(geom, strict_rows=strict_rows, tol=tol)
        if stats.prob <= min_probability:
            continue
        cells.append(
            Cell(geom=geom, stats=stats, strict_rows=strict_rows, origin=((label, scenario, cone.face_id),))
        )
    partition = Partition(cells=tuple(cells))
    missing = 1.0 - partition.total_probability
    if missing > MASS_TOL:
        raise RecourseInfeasibleError(
            f"recourse infeasible at x on a region of probability {missing:.6g} (scenario {scenario})",
            region=dict(scenario=scenario, probability=missing),
        )
    return partition


def adapted_partition(
    prob: TwoStageProblem,
    x: np.ndarray,
    fans: Optional[Sequence[Fan]] = None,
    tol: float = TOL_GEOM,
    min_probability: float = 1e-12,
) -> Partition:
    """
    R_x: the cells {xi : h - T x in ri(N)} for the cones N of the normal fan, keeping positive probabilities.

    With several recourse scenarios the result is the common refinement of the per-scenario partitions.

    Raises
    ------
    RecourseInfeasibleError
        When h - T x leaves the fan coverage with positive probability.
    """
    x = np.asarray(x, dtype=float)
    if fans is None:
        fans = problem_fans(prob, tol=tol)
    if len(fans) != len(prob.scenarios):
        raise StructuralError(f"Expected {len(prob.scenarios)} fans, got {len(fans)}.")
    if isinstance(prob.distribution, DiscreteAtoms):
        return _atoms_adapted_partition(prob, x, fans, tol)
    partition = None
    for scenario, fan in enumerate(fans):
        scenario_partition = _scenario_adapted_partition(prob, x, scenario, fan, tol, min_probability)
        if partition is None:
            partition = scenario_partition
        else:
            partition = common_refinement(partition, scenario_partition, prob.distribution, min_probability, tol)
    return partition


def _cell_scenarios(dist: XiDistribution, cell: Cell, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Points (T, h) whose convex hull covers the closure of the cell: its atoms, or the vertices of cell ∩ support."""
    if isinstance(dist, DiscreteAtoms):
        if cell.members is not None:
            atoms = np.array(sorted(cell.members), dtype=int)
        else:
            atoms = np.flatnonzero(dist.atoms_in(cell.geom, strict_rows=cell.strict_rows, tol=tol))
        atoms = atoms[dist.weights[atoms] > 0.0]
        return dist.T[atoms], dist.h[atoms]
    if isinstance(dist, UniformBox):
        vertices = h_to_v(intersect(cell.geom, dist.support())).vertices
        return dist.unflatten(dist.embed(vertices))
    raise StructuralError(f"Adaptedness checks are not available for {dist!r}.")


def check_adapted(
    prob: TwoStageProblem,
    x: np.ndarray,
    partition: Partition,
    fans: Optional[Sequence[Fan]] = None,
    tol: float = TOL_GEOM,
) -> bool:
    """
    Whether every cell lies, for every recourse scenario, in the closed preimage of one maximal cone.

    The closed preimages containing a point psi = h - T x are those of the minimal faces of D optimal at psi, so a
    cell qualifies when one vertex of D is optimal at every scenario of the cell.
    """
    x = np.asarray(x, dtype=float)
    if fans is None:
        fans = problem_fans(prob, tol=tol)
    for cell in partition:
        T, h = _cell_scenarios(prob.distribution, cell, tol)
        if T.shape[0] == 0:
            continue
        psi = h - T @ x
        for fan in fans:
            common = np.ones(fan.dual_vrep.vertices.shape[0], dtype=bool)
            for point in psi:
                mask = optimal_vertex_mask(fan, point, tol=tol)
                if mask is None:
                    return False
                common &= mask
                if not common.any():
                    return False
    return True
