"""Run reports: the iteration table, the summary and the newline-delimited result records."""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd

from two_stage_apm.partition import Partition
from two_stage_apm.solvers import IterationRecord, MeanValueResult, SAAResult, SolverState

TIMING_PHASES = ("master", "partition", "refinement", "upper_bound")

EXIT_CODES = dict(converged=0, completed=0, max_iter=2)


@dataclass(frozen=True)
class RunReport:
    """
    Outcome of one run.

    ``status`` is ``converged`` or ``max_iter`` for the iterative modes and ``completed`` for the reference modes.
    Timings are kept out of the structured records so that seeded runs write identical files.
    """

    problem: str
    mode: str
    status: str
    value: float
    z_lower: float
    z_upper: float
    incumbent: Optional[Tuple[float, ...]] = None
    history: Tuple[IterationRecord, ...] = ()
    extras: dict = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict, compare=False)
    partition: Optional[Partition] = field(default=None, compare=False, repr=False)

    @classmethod
    def from_state(cls, problem: str, state: SolverState) -> "RunReport":
        timings = {phase: sum(record.timings.get(phase, 0.0) for record in state.history) for phase in TIMING_PHASES}
        return cls(
            problem=problem,
            mode=state.method,
            status="converged" if state.converged else "max_iter",
            value=float(state.z_upper),
            z_lower=float(state.z_lower),
            z_upper=float(state.z_upper),
            incumbent=None if state.incumbent is None else tuple(float(v) for v in state.incumbent),
            history=tuple(state.history),
            extras=dict(num_cuts=len(state.cut_pool)) if state.method == "lshaped" else dict(),
            timings=timings,
            partition=state.partition,
        )

    @classmethod
    def from_mean_value(cls, problem: str, result: MeanValueResult, partition: Optional[Partition] = None):
        record = IterationRecord(
            k=1,
            x=result.x,
            z_lower=result.z_lower,
            z_upper=result.z_upper,
            partition_size=1,
            iteration_lower=result.z_lower,
            iteration_upper=result.z_upper,
        )
        return cls(
            problem=problem,
            mode="meanvalue",
            status="completed",
            value=result.z_upper,
            z_lower=result.z_lower,
            z_upper=result.z_upper,
            incumbent=result.x,
            history=(record,),
            partition=partition,
        )

    @classmethod
    def from_saa(cls, problem: str, result: SAAResult) -> "RunReport":
        low, high = result.interval
        return cls(
            problem=problem,
            mode="saa-ref",
            status="completed",
            value=result.mean,
            z_lower=low,
            z_upper=high,
            extras=dict(
                std_error=result.std_error,
                radius=result.radius,
                confidence=result.confidence,
                num_samples=result.num_samples,
                num_replications=len(result.values),
                replication_values=list(result.values),
            ),
        )

    @property
    def converged(self) -> bool:
        return self.status != "max_iter"

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @property
    def num_iterations(self) -> int:
        return len(self.history)

    def to_frame(self, include_timings: bool = False) -> pd.DataFrame:
        """The iteration table indexed by k."""
        rows = []
        for record in self.history:
            row = record.to_dict()
            if include_timings:
                row.update({phase: record.timings.get(phase, 0.0) for phase in TIMING_PHASES})
            rows.append(row)
        columns = ["k", "x", "z_lower", "z_upper", "gap", "partition_size"]
        if include_timings:
            columns += list(TIMING_PHASES)
        return pd.DataFrame.from_records(rows, columns=columns).set_index("k")

    def summary(self) -> dict:
        summary = dict(
            record="summary",
            problem=self.problem,
            mode=self.mode,
            status=self.status,
            iterations=self.num_iterations,
            value=self.value,
            z_lower=self.z_lower,
            z_upper=self.z_upper,
            incumbent=None if self.incumbent is None else list(self.incumbent),
            partition_size=None if self.partition is None else len(self.partition),
        )
        summary.update(self.extras)
        return summary

    def to_records(self) -> List[dict]:
        """One record per iteration followed by the summary record, all deterministic."""
        records = [dict(record="iteration", **record.to_dict()) for record in self.history]
        records.append(self.summary())
        return records

    def format_table(self) -> str:
        """The human-readable report: bounds to 2 decimals, timings in seconds."""
        lines = [f"{self.problem} [{self.mode}]: {self.status}"]
        if self.history:
            frame = self.to_frame(include_timings=True)
            frame["x"] = frame["x"].map(lambda x: "(" + ", ".join(f"{value:.2f}" for value in x) + ")")
            for phase in TIMING_PHASES:
                frame[phase] = frame[phase].map(lambda seconds: f"{seconds:.3f}")
            frame = frame.rename(columns=dict(x="x_k", z_lower="z_L", z_upper="z_U", partition_size="|P|"))
            lines.append(frame.to_string(float_format=lambda value: f"{value:.2f}"))
        if self.mode == "saa-ref":
            lines.append(
                f"SAA mean {self.value:.2f} ± {self.extras['radius']:.2f} "
                f"({100 * self.extras['confidence']:.0f}%, {self.extras['num_replications']} x "
                f"{self.extras['num_samples']} samples)"
            )
        else:
            lines.append(f"value {self.value:.2f}  z_L {self.z_lower:.2f}  z_U {self.z_upper:.2f}")
            if self.incumbent is not None:
                lines.append("incumbent (" + ", ".join(f"{value:.6g}" for value in self.incumbent) + ")")
        if self.timings:
            lines.append("time " + "  ".join(f"{phase} {seconds:.3f}s" for phase, seconds in self.timings.items()))
        return "\n".join(lines)

    def write_records(self, file_path: Union[str, Path]) -> Path:
        return write_jsonl(self.to_records(), file_path)

    def write_partition(self, file_path: Union[str, Path]) -> Path:
        if self.partition is None:
            raise ValueError(f"The {self.mode} run has no partition to write.")
        return write_jsonl(self.partition.to_records(), file_path)


def write_jsonl(records: List[dict], file_path: Union[str, Path]) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w") as file:
        for record in records:
            file.write(json.dumps(record) + "\n")
    return file_path
