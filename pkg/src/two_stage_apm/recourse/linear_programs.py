"""Thin wrapper around scipy's HiGHS linear programming interface."""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import issparse

from two_stage_apm.exceptions import LPSolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

Bounds = Union[Tuple[Optional[float], Optional[float]], Sequence[Tuple[Optional[float], Optional[float]]]]


@dataclass(frozen=True, eq=False)
class LPResult:
    """
    Outcome of an LP solve.

    ``dual`` holds the multipliers of the equality constraints and ``dual_ub`` those of the inequality constraints,
    both as sensitivities of the optimal value to the right-hand side. ``ray`` carries an infeasibility certificate
    when one was computed.
    """

    status: str
    value: float
    primal: Optional[np.ndarray] = None
    dual: Optional[np.ndarray] = None
    dual_ub: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _has_rows(matrix) -> bool:
    return matrix is not None and matrix.shape[0] > 0


def solve_lp(
    c: np.ndarray,
    A_ub=None,
    b_ub: Optional[np.ndarray] = None,
    A_eq=None,
    b_eq: Optional[np.ndarray] = None,
    bounds: Bounds = (0, None),
    feasibility_tol: float = 1e-7,
    optimality_tol: float = 1e-7,
) -> LPResult:
    """
    Minimize c^T z subject to A_ub z <= b_ub, A_eq z = b_eq and the variable bounds.

    Raises
    ------
    LPSolverError
        When HiGHS stops for another reason than optimality, infeasibility or unboundedness.
    """
    if not issparse(A_ub) and A_ub is not None:
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    if not issparse(A_eq) and A_eq is not None:
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    has_ub = _has_rows(A_ub)
    has_eq = _has_rows(A_eq)
    arguments = dict(
        c=np.asarray(c, dtype=float),
        A_ub=A_ub if has_ub else None,
        b_ub=np.asarray(b_ub, dtype=float) if has_ub else None,
        A_eq=A_eq if has_eq else None,
        b_eq=np.asarray(b_eq, dtype=float) if has_eq else None,
        bounds=bounds,
        method="highs",
    )
    options = dict(primal_feasibility_tolerance=feasibility_tol, dual_feasibility_tolerance=optimality_tol)
    result = linprog(**arguments, options=options)
    if result.status == 4:
        # presolve may stop at "infeasible or unbounded"; the full solve tells them apart
        result = linprog(**arguments, options=dict(options, presolve=False))
    if result.status == 0:
        return LPResult(
            status=OPTIMAL,
            value=float(result.fun),
            primal=np.asarray(result.x),
            dual=np.asarray(result.eqlin.marginals) if has_eq else np.zeros(0),
            dual_ub=np.asarray(result.ineqlin.marginals) if has_ub else np.zeros(0),
        )
    if result.status == 2:
        return LPResult(status=INFEASIBLE, value=np.inf)
    if result.status == 3:
        return LPResult(status=UNBOUNDED, value=-np.inf)
    raise LPSolverError(f"HiGHS stopped with status {result.status}: {result.message}")
