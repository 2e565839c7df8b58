"""Two-stage stochastic linear programs with fixed recourse."""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from two_stage_apm.exceptions import DualInfeasibleError, StructuralError
from two_stage_apm.geometry import HRep
from two_stage_apm.measure import XiDistribution
from two_stage_apm.recourse.linear_programs import solve_lp


@dataclass(frozen=True, eq=False)
class RecourseScenario:
    """A recourse matrix W (num_rows x m) with its cost q, taken with probability ``weight``."""

    W: np.ndarray
    q: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if W.shape[1] != q.shape[0]:
            raise StructuralError(f"W has {W.shape[1]} columns but q has {q.shape[0]} entries.")
        if self.weight < 0:
            raise StructuralError(f"Scenario weights must be nonnegative, got {self.weight}.")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def num_recourse(self) -> int:
        return self.W.shape[1]

    @property
    def dual_set(self) -> HRep:
        """D = {lambda : W^T lambda <= q}."""
        return HRep(A=self.W.T, b=self.q)


@dataclass(frozen=True, eq=False)
class TwoStageProblem:
    """
    min c^T x + E[ sum_s weight_s Q_s(x, xi) ] over X = {x >= 0 : A x = b}, with
    Q_s(x, xi) = min { q_s^T y : W_s y = h - T x, y >= 0 } and xi = (T, h) drawn from ``distribution``.

    A single-scenario problem has one ``RecourseScenario`` of weight 1.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    scenarios: Tuple[RecourseScenario, ...]
    distribution: XiDistribution
    name: str = "problem"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        num_first_stage = c.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, num_first_stage)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[1] != num_first_stage:
            raise StructuralError(f"A must have {num_first_stage} columns, got shape {A.shape}.")
        if A.shape[0] != b.shape[0]:
            raise StructuralError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries.")
        scenarios = tuple(self.scenarios)
        if not scenarios:
            raise StructuralError("At least one recourse scenario is required.")
        dist = self.distribution
        if dist.num_cols != num_first_stage:
            raise StructuralError(f"T has {dist.num_cols} columns but there are {num_first_stage} first-stage variables.")
        for index, scenario in enumerate(scenarios):
            if scenario.W.shape[0] != dist.num_rows:
                raise StructuralError(f"W of scenario {index} has {scenario.W.shape[0]} rows, expected {dist.num_rows}.")
        total_weight = sum(scenario.weight for scenario in scenarios)
        if abs(total_weight - 1.0) > 1e-12 * len(scenarios):
            raise StructuralError(f"Recourse scenario weights must sum to 1, got {total_weight!r}.")
        for index, scenario in enumerate(scenarios):
            feasibility = solve_lp(
                c=np.zeros(dist.num_rows), A_ub=scenario.W.T, b_ub=scenario.q, bounds=(None, None)
            )
            if not feasibility.optimal:
                raise DualInfeasibleError(f"dual infeasible: D is empty for recourse scenario {index}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "scenarios", scenarios)

    @classmethod
    def single(
        cls,
        c: np.ndarray,
        A: np.ndarray,
        b: np.ndarray,
        W: np.ndarray,
        q: np.ndarray,
        distribution: XiDistribution,
        name: str = "problem",
        metadata: Optional[dict] = None,
    ) -> "TwoStageProblem":
        return cls(
            c=c,
            A=A,
            b=b,
            scenarios=(RecourseScenario(W=W, q=q),),
            distribution=distribution,
            name=name,
            metadata=metadata or dict(),
        )

    def __repr__(self):
        return (
            f"TwoStageProblem(name={self.name!r}, num_first_stage={self.num_first_stage}, "
            f"num_rows={self.num_rows}, num_scenarios={len(self.scenarios)}, distribution={self.distribution!r})"
        )

    @property
    def num_first_stage(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.distribution.num_rows

    @property
    def W(self) -> np.ndarray:
        return self._only_scenario().W

    @property
    def q(self) -> np.ndarray:
        return self._only_scenario().q

    def _only_scenario(self) -> RecourseScenario:
        if len(self.scenarios) != 1:
            raise StructuralError(f"{self.name} has {len(self.scenarios)} recourse scenarios, not a single W.")
        return self.scenarios[0]

    def is_first_stage_feasible(self, x: np.ndarray, tol: float = 1e-7) -> bool:
        x = np.asarray(x, dtype=float)
        residual = self.A @ x - self.b
        return bool(np.all(x >= -tol) and np.all(np.abs(residual) <= tol * (1.0 + np.abs(self.b))))

    def with_distribution(self, distribution: XiDistribution, name: Optional[str] = None) -> "TwoStageProblem":
        return TwoStageProblem(
            c=self.c,
            A=self.A,
            b=self.b,
            scenarios=self.scenarios,
            distribution=distribution,
            name=name or self.name,
            metadata=self.metadata,
        )

    def dual_sets(self) -> Sequence[HRep]:
        return [scenario.dual_set for scenario in self.scenarios]
