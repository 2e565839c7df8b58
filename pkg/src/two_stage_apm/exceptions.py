"""Errors raised by the two-stage adaptive partition solver."""
from typing import Optional, Sequence

import numpy as np


class APMError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(APMError, ValueError):
    """Inputs with inconsistent dimensions, empty inputs or missing intermediate results."""


class DualInfeasibleError(APMError):
    """The dual feasible set D = {λ : W^T λ <= q} is empty."""

    def __init__(self, message: str = "dual infeasible"):
        super().__init__(message)


class NumericalDegeneracyError(APMError):
    """A point could not be classified into a single cone within the geometric tolerance."""

    def __init__(self, message: str, candidates: Sequence[tuple]):
        super().__init__(f"{message} (candidates: {list(candidates)})")
        self.candidates = tuple(candidates)


class UnboundedPolyhedronError(APMError):
    """A bounded polyhedron was required but the input has rays or lineality."""


class RecourseInfeasibleError(APMError):
    """The second stage has no feasible solution for a region of positive probability."""

    def __init__(
        self,
        message: str,
        region: Optional[dict] = None,
        ray: Optional[np.ndarray] = None,
    ):
        super().__init__(message)
        self.region = region or dict()
        self.ray = ray


class MasterInfeasibleError(APMError):
    """The first-stage feasible set intersected with the feasibility cuts is empty."""

    def __init__(self, message: str = "no admissible first stage"):
        super().__init__(message)


class MasterUnboundedError(APMError):
    """The master problem is unbounded; ``ray`` is an improving direction of the master variables."""

    def __init__(self, message: str, ray: Optional[np.ndarray] = None):
        super().__init__(message)
        self.ray = ray


class PartitionConsistencyError(APMError):
    """Probability mass was lost while building or refining a partition."""


class NotAdaptedError(APMError):
    """A user supplied partition is not adapted to the current first-stage decision."""


class ProblemValidationError(APMError, ValueError):
    """A problem file failed validation; ``path`` is the dotted path of the offending field."""

    def __init__(self, message: str, path: str = ""):
        location = f" at '{path}'" if path else ""
        super().__init__(f"{message}{location}")
        self.path = path


class LPSolverError(APMError):
    """The LP backend ended with a status other than optimal, infeasible or unbounded."""
