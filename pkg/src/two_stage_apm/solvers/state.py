"""Solver state, per-iteration records, cut pools and the iteration bound."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from two_stage_apm.partition import Partition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterationRecord:
    """
    A read-only snapshot of one iteration, laid out like the classic k / x_k / z_L / z_U / |P| table.

    ``z_lower`` and ``z_upper`` are the running bounds. ``iteration_lower`` is the master value of this iteration and
    ``iteration_upper`` is c^T x_k plus the recourse estimate computed at x_k.
    """

    k: int
    x: Tuple[float, ...]
    z_lower: float
    z_upper: float
    partition_size: int
    iteration_lower: float = math.nan
    iteration_upper: float = math.nan
    timings: Dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def gap(self) -> float:
        return self.z_upper - self.z_lower

    def to_dict(self, include_timings: bool = False) -> dict:
        record = dict(
            k=self.k,
            x=list(self.x),
            z_lower=self.z_lower,
            z_upper=self.z_upper,
            gap=self.gap,
            partition_size=self.partition_size,
            iteration_lower=self.iteration_lower,
            iteration_upper=self.iteration_upper,
        )
        if include_timings:
            record.update(timings=dict(self.timings))
        return record


@dataclass
class CutPool:
    """Optimality cuts theta >= g^T x + v and feasibility cuts f^T x <= f_bar."""

    optimality_cuts: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    feasibility_cuts: List[Tuple[np.ndarray, float]] = field(default_factory=list)

    def add_optimality_cut(self, g: np.ndarray, v: float):
        self.optimality_cuts.append((np.asarray(g, dtype=float), float(v)))

    def add_feasibility_cuts(self, cuts):
        self.feasibility_cuts.extend((np.asarray(f, dtype=float), float(f_bar)) for f, f_bar in cuts)

    def lower_model(self, x: np.ndarray) -> float:
        """max over the optimality cuts of g^T x + v, -inf without cuts."""
        return max((float(g @ x + v) for g, v in self.optimality_cuts), default=-math.inf)

    def __len__(self):
        return len(self.optimality_cuts) + len(self.feasibility_cuts)


@dataclass
class SolverState:
    """
    The state owned by a solver loop: iteration counter, partition, iterate, bounds and incumbent.

    ``history`` holds immutable snapshots; ``converged`` is False when the loop stopped at max_iter.
    """

    method: str
    k: int = 0
    partition: Optional[Partition] = None
    x: Optional[np.ndarray] = None
    z_lower: float = -math.inf
    z_upper: float = math.inf
    iteration_lower: float = -math.inf
    iteration_upper: float = math.inf
    incumbent: Optional[np.ndarray] = None
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    cut_pool: CutPool = field(default_factory=CutPool)

    @property
    def gap(self) -> float:
        return self.z_upper - self.z_lower

    @property
    def value(self) -> float:
        """The value of the incumbent."""
        return self.z_upper

    def update_bounds(self, z_lower: float, z_upper: float, x: np.ndarray, tol: float = 1e-6) -> bool:
        """
        Fold the bounds of one iteration into the running bounds and return whether the incumbent changed.

        z_L is a running maximum and z_U a running minimum. A crossing within ``tol * max(1, |z_U|)`` is LP round-off
        and lowers z_L onto z_U; a larger crossing is logged and left in place.
        """
        self.iteration_lower = float(z_lower)
        self.iteration_upper = float(z_upper)
        improved = z_upper < self.z_upper
        if improved:
            self.incumbent = np.array(x, dtype=float)
            self.z_upper = float(z_upper)
        self.z_lower = max(self.z_lower, float(z_lower))
        crossing = self.z_lower - self.z_upper
        if crossing > tol * max(1.0, abs(self.z_upper)):
            logger.warning(
                f"Lower bound {self.z_lower:.12g} exceeds upper bound {self.z_upper:.12g} "
                f"by {crossing:.3g} at k={self.k}."
            )
        elif crossing > 0.0:
            self.z_lower = self.z_upper
        return improved

    def record(self, timings: Dict[str, float], partition_size: int):
        self.history.append(
            IterationRecord(
                k=self.k,
                x=tuple(float(value) for value in self.x),
                z_lower=float(self.z_lower),
                z_upper=float(self.z_upper),
                partition_size=int(partition_size),
                iteration_lower=self.iteration_lower,
                iteration_upper=self.iteration_upper,
                timings=dict(timings),
            )
        )


def gap_closed(z_lower: float, z_upper: float, eps: float, relative_gap: bool = False) -> bool:
    threshold = eps * max(1.0, abs(z_upper)) if relative_gap else eps
    return z_upper - z_lower <= threshold


def iteration_bound(n: int, L: float, M: float, eps: float) -> int:
    """
    Worst-case number of iterations to reach an eps-solution: ceil((sqrt(n) L M / eps + 1)^n).

    L is a Lipschitz constant of the objective on X ∩ dom(V) and M the diameter of that set.
    """
    if n <= 0 or L <= 0 or M <= 0 or eps <= 0:
        raise ValueError(f"iteration_bound needs positive inputs, got n={n}, L={L}, M={M}, eps={eps}.")
    bound = (math.sqrt(n) * L * M / eps + 1.0) ** n
    # absorb float noise on exact integers
    return int(math.ceil(bound - 1e-9 * bound))
