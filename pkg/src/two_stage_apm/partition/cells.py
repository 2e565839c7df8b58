"""Cells and partitions of the scenario space, and their common refinement."""
import hashlib
import logging
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from two_stage_apm.exceptions import PartitionConsistencyError, StructuralError
from two_stage_apm.geometry import TOL_GEOM, HRep, intersect
from two_stage_apm.measure import CellStats, DiscreteAtoms, XiDistribution

logger = logging.getLogger(__name__)

# (label of the first-stage decision, recourse scenario, face_id of the cone)
Lineage = Tuple[Tuple[str, int, Tuple[int, ...]], ...]

MASS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Cell:
    """
    A relatively open polyhedral cell over the random coordinates of xi, with its statistics.

    Parameters
    ----------
    geom : HRep
        The closure of the cell.
    stats : CellStats
        Probability and conditional means.
    strict_rows : FrozenSet[int]
        Rows of ``geom`` that hold strictly inside the cell.
    origin : Lineage
        One (decision label, recourse scenario, face_id) tag per adapted partition the cell descends from.
    members : FrozenSet[int], optional
        Indices of the atoms in the cell, for discrete laws.
    """

    geom: HRep
    stats: CellStats
    strict_rows: FrozenSet[int] = frozenset()
    origin: Lineage = ()
    members: Optional[FrozenSet[int]] = None

    @property
    def prob(self) -> float:
        return self.stats.prob

    @property
    def signature(self) -> str:
        if not self.origin:
            return "root"
        return " & ".join(f"{label}/s{scenario}/{list(face_id)}" for label, scenario, face_id in self.origin)

    def __repr__(self):
        return f"Cell(signature={self.signature!r}, prob={self.prob:.6g}, num_rows={self.geom.num_rows})"


@dataclass(frozen=True, eq=False)
class Partition:
    """A finite collection of cells of positive probability whose probabilities sum to one."""

    cells: Tuple[Cell, ...]

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))

    def __len__(self):
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __getitem__(self, index: int) -> Cell:
        return self.cells[index]

    def __repr__(self):
        return f"Partition(num_cells={len(self)}, total_probability={self.total_probability:.12g})"

    @property
    def stats(self) -> List[CellStats]:
        return [cell.stats for cell in self.cells]

    @property
    def total_probability(self) -> float:
        return float(sum(cell.prob for cell in self.cells))

    def to_records(self) -> List[dict]:
        """One JSON-serializable record per cell: lineage signature, probability and conditional means."""
        return [
            dict(
                cell=index,
                signature=cell.signature,
                prob=cell.prob,
                mean_T=cell.stats.mean_T.tolist(),
                mean_h=cell.stats.mean_h.tolist(),
            )
            for index, cell in enumerate(self.cells)
        ]

    def to_frame(self) -> pd.DataFrame:
        records = self.to_records()
        frame = pd.DataFrame.from_records(records, columns=["cell", "signature", "prob", "mean_T", "mean_h"])
        return frame.set_index("cell")


def trivial_partition(dist: XiDistribution) -> Partition:
    """The partition {Xi} with the total statistics."""
    members = frozenset(range(dist.num_atoms)) if isinstance(dist, DiscreteAtoms) else None
    geom = HRep.full_space(dist.num_random)
    return Partition(cells=(Cell(geom=geom, stats=dist.cell_stats(geom, members=members), members=members),))


def partition_from_atom_groups(dist: DiscreteAtoms, groups: Sequence[Iterable[int]]) -> Partition:
    """
    An explicit partition of a discrete law whose cells are groups of atoms.

    Every atom of positive weight must belong to exactly one group; the cell geometry is the whole space since
    membership is carried by the atom indices.
    """
    if not isinstance(dist, DiscreteAtoms):
        raise StructuralError("Atom groups only define partitions of discrete laws.")
    groups = [frozenset(int(atom) for atom in group) for group in groups]
    label = "groups-" + hashlib.sha1(repr([sorted(group) for group in groups]).encode()).hexdigest()[:10]
    seen = set()
    cells = []
    for index, group in enumerate(groups):
        if seen & group:
            raise StructuralError(f"Atoms {sorted(seen & group)} appear in more than one group.")
        seen |= group
        stats = dist.cell_stats(members=group)
        if stats.prob > 0.0:
            cells.append(
                Cell(
                    geom=HRep.full_space(dist.num_random),
                    stats=stats,
                    origin=((label, 0, (index,)),),
                    members=group,
                )
            )
    missing = [atom for atom in np.flatnonzero(dist.weights > 0.0) if atom not in seen]
    if missing:
        raise StructuralError(f"Atoms {missing} are not covered by any group.")
    return Partition(cells=tuple(cells))


def _lineage_decision(p: Cell, r: Cell) -> Optional[bool]:
    """
    Whether p is inside r (True) or disjoint from it (False) according to their lineage alone, None when undecided.

    Both cells descend from adapted partitions; two tags with the same decision and scenario but different faces come
    from disjoint relative interiors.
    """
    if not r.origin:
        return True if r.prob >= 1.0 - 1e-12 else None
    faces = {(label, scenario): face_id for label, scenario, face_id in p.origin}
    contained = True
    for label, scenario, face_id in r.origin:
        known = faces.get((label, scenario))
        if known is None:
            contained = False
        elif known != face_id:
            return False
    return True if contained else None


def _intersect_cells(p: Cell, r: Cell) -> Tuple[HRep, FrozenSet[int]]:
    geom = intersect(p.geom, r.geom)
    strict_rows = p.strict_rows | frozenset(row + p.geom.num_rows for row in r.strict_rows)
    return geom, strict_rows


def _intersect_members(p: Cell, r: Cell) -> Optional[FrozenSet[int]]:
    if p.members is None:
        return r.members
    if r.members is None:
        return p.members
    return p.members & r.members


def intersect_cell(
    p: Cell, r: Cell, dist: XiDistribution, tol: float = TOL_GEOM
) -> Tuple[HRep, FrozenSet[int], Optional[FrozenSet[int]], CellStats]:
    """Geometry, strict rows, atoms and fresh statistics of p intersected with r."""
    geom, strict_rows = _intersect_cells(p, r)
    members = _intersect_members(p, r)
    if p.members is not None and r.members is None:
        # members of p outside r's geometry must go
        inside = dist.atoms_in(r.geom, strict_rows=r.strict_rows, tol=tol)
        members = frozenset(atom for atom in p.members if inside[atom])
    elif r.members is not None and p.members is None:
        inside = dist.atoms_in(p.geom, strict_rows=p.strict_rows, tol=tol)
        members = frozenset(atom for atom in r.members if inside[atom])
    if members is not None and not members:
        return geom, strict_rows, members, CellStats.null()
    return geom, strict_rows, members, dist.cell_stats(geom, strict_rows=strict_rows, members=members, tol=tol)


def common_refinement(
    p: Partition,
    r: Partition,
    dist: XiDistribution,
    min_probability: float = 1e-12,
    tol: float = TOL_GEOM,
) -> Partition:
    """
    All pairwise intersections of cells of p and r with positive probability, each with fresh statistics.

    Pairs decided by lineage are kept whole or skipped without geometry.

    Raises
    ------
    PartitionConsistencyError
        When the cells found carry less than 1 - 1e-6 of the probability.
    """
    cells = []
    num_shortcuts = 0
    for p_cell in p:
        for r_cell in r:
            decision = _lineage_decision(p_cell, r_cell)
            if decision is False:
                num_shortcuts += 1
                continue
            if decision is True:
                num_shortcuts += 1
                cells.append(p_cell)
                continue
            geom, strict_rows, members, stats = intersect_cell(p_cell, r_cell, dist, tol=tol)
            if stats.prob <= min_probability:
                if stats.prob > 0.0:
                    logger.debug(f"Dropping a cell of probability {stats.prob:.3g}.")
                continue
            cells.append(
                Cell(
                    geom=geom,
                    stats=stats,
                    strict_rows=strict_rows,
                    origin=p_cell.origin + r_cell.origin,
                    members=members,
                )
            )
    refinement = Partition(cells=tuple(cells))
    logger.debug(f"Refinement of {len(p)} x {len(r)} cells: {len(refinement)} cells, {num_shortcuts} by lineage.")
    if refinement.total_probability < 1.0 - MASS_TOL:
        raise PartitionConsistencyError(
            f"The common refinement carries probability {refinement.total_probability:.9f} < 1."
        )
    return refinement


def is_refinement(p: Partition, r: Partition, dist: XiDistribution, tol: float = 1e-9) -> bool:
    """Whether every cell of p is contained, up to probability tol, in some cell of r."""
    for p_cell in p:
        inside = False
        for r_cell in r:
            *_, stats = intersect_cell(p_cell, r_cell, dist)
            if stats.prob >= p_cell.prob - tol:
                inside = True
                break
        if not inside:
            return False
    return True
