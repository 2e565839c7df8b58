"""Reference values: the mean-value problem and replicated sample average approximations."""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from two_stage_apm.options import SolverOptions
from two_stage_apm.partition import adapted_partition, problem_fans, trivial_partition
from two_stage_apm.recourse import TwoStageProblem, eval_VP, extensive_form, solve_master

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeanValueResult:
    """The Jensen lower bound, its minimizer and the exact value of that minimizer."""

    z_lower: float
    x: Tuple[float, ...]
    z_upper: float


@dataclass(frozen=True)
class SAAResult:
    values: Tuple[float, ...]
    mean: float
    std_error: float
    radius: float
    confidence: float
    num_samples: int

    @property
    def interval(self) -> Tuple[float, float]:
        return self.mean - self.radius, self.mean + self.radius


def mean_value(prob: TwoStageProblem, options: Optional[SolverOptions] = None) -> MeanValueResult:
    """Solve with the partition {Xi} and evaluate the solution exactly through its adapted partition."""
    options = options or SolverOptions()
    z_lower, x = solve_master(prob, trivial_partition(prob.distribution).stats, options=options)
    fans = problem_fans(prob, tol=options.tol_geom)
    partition = adapted_partition(prob, x, fans, tol=options.tol_geom, min_probability=options.min_cell_probability)
    value, _ = eval_VP(prob, x, partition.stats, options=options)
    return MeanValueResult(z_lower=z_lower, x=tuple(float(v) for v in x), z_upper=float(prob.c @ x) + value)


def saa_reference(
    prob: TwoStageProblem,
    num_samples: Optional[int] = None,
    num_replications: Optional[int] = None,
    seed: Optional[int] = None,
    confidence: Optional[float] = None,
    options: Optional[SolverOptions] = None,
) -> SAAResult:
    """
    Solve ``num_replications`` extensive forms on i.i.d. samples of ``num_samples`` scenarios.

    The interval is mean ± t_{(1 + confidence) / 2, R - 1} * std / sqrt(R) over the R replication values.
    """
    options = options or SolverOptions()
    num_samples = options.num_samples if num_samples is None else num_samples
    num_replications = options.num_replications if num_replications is None else num_replications
    seed = options.seed if seed is None else seed
    confidence = options.confidence if confidence is None else confidence
    if num_replications < 2:
        raise ValueError(f"At least two replications are needed for an interval, got {num_replications}.")

    rng = np.random.default_rng(seed)
    values = []
    for replication in range(num_replications):
        sampled = prob.with_distribution(prob.distribution.sample(rng, num_samples), name=f"{prob.name}-saa")
        value, _ = extensive_form(sampled, options=options)
        values.append(value)
        logger.debug(f"SAA replication {replication}: {value:.6f}")
    values = np.array(values)
    std_error = float(values.std(ddof=1) / np.sqrt(num_replications))
    radius = float(stats.t.ppf(0.5 * (1.0 + confidence), df=num_replications - 1) * std_error)
    return SAAResult(
        values=tuple(float(v) for v in values),
        mean=float(values.mean()),
        std_error=std_error,
        radius=radius,
        confidence=confidence,
        num_samples=num_samples,
    )
