"""JSON problem files: validation, parsing and writing."""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from jsonschema import Draft7Validator
from neuroconv.utils import load_dict_from_file

from two_stage_apm.exceptions import ProblemValidationError, StructuralError
from two_stage_apm.measure import DiscreteAtoms, UniformBox, XiDistribution
from two_stage_apm.recourse import RecourseScenario, TwoStageProblem

SCHEMA_PATH = Path(__file__).parent / "problem_file_schema.json"


@dataclass(frozen=True, eq=False)
class ProblemFile:
    """A problem together with the nested solver options and description stored next to it."""

    problem: TwoStageProblem
    options: dict = field(default_factory=dict)
    description: str = ""


def _validate_schema(document: dict):
    schema = json.loads(SCHEMA_PATH.read_text())
    errors = sorted(Draft7Validator(schema).iter_errors(document), key=lambda error: list(error.absolute_path))
    if errors:
        error = errors[0]
        path = ".".join(str(part) for part in error.absolute_path)
        raise ProblemValidationError(error.message, path=path)


def _matrix(values, num_columns: int, path: str) -> np.ndarray:
    for index, row in enumerate(values):
        if len(row) != num_columns:
            raise ProblemValidationError(f"Expected {num_columns} entries, got {len(row)}", path=f"{path}.{index}")
    return np.array(values, dtype=float).reshape(len(values), num_columns)


def _entry_bounds(entry, path: str):
    if isinstance(entry, list):
        low, high = entry
        if low > high:
            raise ProblemValidationError(f"Interval [{low}, {high}] is not ordered", path=path)
        return low, high
    return entry, entry


def _parse_distribution(document: dict, num_first_stage: int) -> XiDistribution:
    kind = document["type"]
    payload = document["payload"]
    if kind == "atoms":
        T = payload["T"]
        num_rows = len(T[0])
        atoms_T = [_matrix(atom, num_first_stage, f"distribution.payload.T.{k}") for k, atom in enumerate(T)]
        for k, atom in enumerate(atoms_T):
            if atom.shape[0] != num_rows:
                raise ProblemValidationError(f"Expected {num_rows} rows, got {atom.shape[0]}", path=f"distribution.payload.T.{k}")
        h = _matrix(payload["h"], num_rows, "distribution.payload.h")
        weights = np.array(payload["weights"], dtype=float)
        if h.shape[0] != len(atoms_T) or weights.shape[0] != len(atoms_T):
            raise ProblemValidationError(
                f"T, h and weights must describe the same {len(atoms_T)} atoms", path="distribution.payload"
            )
        if abs(weights.sum() - 1.0) > 1e-12 * max(1, weights.shape[0]):
            raise ProblemValidationError(f"Weights sum to {weights.sum()!r} instead of 1", path="distribution.payload.weights")
        return DiscreteAtoms(T=np.stack(atoms_T), h=h, weights=weights)

    T, h = payload["T"], payload["h"]
    num_rows = len(T)
    if len(h) != num_rows:
        raise ProblemValidationError(f"Expected {num_rows} entries to match T", path="distribution.payload.h")
    T_low, T_high = np.zeros((num_rows, num_first_stage)), np.zeros((num_rows, num_first_stage))
    for i, row in enumerate(T):
        if len(row) != num_first_stage:
            raise ProblemValidationError(
                f"Expected {num_first_stage} entries, got {len(row)}", path=f"distribution.payload.T.{i}"
            )
        for j, entry in enumerate(row):
            T_low[i, j], T_high[i, j] = _entry_bounds(entry, f"distribution.payload.T.{i}.{j}")
    h_bounds = [_entry_bounds(entry, f"distribution.payload.h.{i}") for i, entry in enumerate(h)]
    return UniformBox(
        T_low=T_low,
        T_high=T_high,
        h_low=np.array([low for low, _ in h_bounds]),
        h_high=np.array([high for _, high in h_bounds]),
    )


def _parse_scenario(document: dict, num_rows: int, path: str, weight: float = 1.0) -> RecourseScenario:
    W = document["W"]
    if len(W) != num_rows:
        raise ProblemValidationError(f"Expected {num_rows} rows to match h, got {len(W)}", path=f"{path}.W")
    num_recourse = len(W[0]) if W else 0
    W = _matrix(W, num_recourse, f"{path}.W")
    if len(document["q"]) != num_recourse:
        raise ProblemValidationError(f"Expected {num_recourse} entries to match W", path=f"{path}.q")
    return RecourseScenario(W=W, q=np.array(document["q"], dtype=float), weight=document.get("weight", weight))


def problem_from_dict(document: dict) -> ProblemFile:
    """
    Validate a problem document against the JSON schema and the dimension rules, then build the problem.

    Raises
    ------
    ProblemValidationError
        With the dotted path of the first offending field.
    """
    _validate_schema(document)
    first_stage = document["first_stage"]
    c = np.array(first_stage["c"], dtype=float)
    num_first_stage = c.shape[0]
    A = _matrix(first_stage.get("A", []), num_first_stage, "first_stage.A")
    b = np.array(first_stage.get("b", []), dtype=float)
    if b.shape[0] != A.shape[0]:
        raise ProblemValidationError(f"Expected {A.shape[0]} entries to match A, got {b.shape[0]}", path="first_stage.b")
    distribution = _parse_distribution(document["distribution"], num_first_stage)

    if "recourse" in document:
        scenarios = (_parse_scenario(document["recourse"], distribution.num_rows, "recourse"),)
    else:
        scenarios = tuple(
            _parse_scenario(scenario, distribution.num_rows, f"recourse_scenarios.{index}")
            for index, scenario in enumerate(document["recourse_scenarios"])
        )
        total = sum(scenario.weight for scenario in scenarios)
        if abs(total - 1.0) > 1e-12 * len(scenarios):
            raise ProblemValidationError(f"Scenario weights sum to {total!r} instead of 1", path="recourse_scenarios")
    try:
        problem = TwoStageProblem(
            c=c,
            A=A,
            b=b,
            scenarios=scenarios,
            distribution=distribution,
            name=document.get("name", "problem"),
        )
    except StructuralError as error:
        raise ProblemValidationError(str(error)) from error
    return ProblemFile(problem=problem, options=document.get("options", dict()), description=document.get("description", ""))


def _entry(low: float, high: float):
    return float(low) if low == high else [float(low), float(high)]


def problem_to_dict(problem_file: ProblemFile) -> dict:
    """The JSON document of a problem file, inverse of ``problem_from_dict``."""
    problem = problem_file.problem
    dist = problem.distribution
    if isinstance(dist, DiscreteAtoms):
        distribution = dict(
            type="atoms",
            payload=dict(T=dist.T.tolist(), h=dist.h.tolist(), weights=dist.weights.tolist()),
        )
    elif isinstance(dist, UniformBox):
        (T_low, h_low), (T_high, h_high) = dist.unflatten(dist.lower), dist.unflatten(dist.upper)
        distribution = dict(
            type="uniform_box",
            payload=dict(
                T=[[_entry(low, high) for low, high in zip(row_low, row_high)] for row_low, row_high in zip(T_low, T_high)],
                h=[_entry(low, high) for low, high in zip(h_low, h_high)],
            ),
        )
    else:
        raise StructuralError(f"Cannot serialize {dist!r}.")

    document = dict(
        name=problem.name,
        description=problem_file.description,
        first_stage=dict(c=problem.c.tolist(), A=problem.A.tolist(), b=problem.b.tolist()),
    )
    if len(problem.scenarios) == 1:
        document["recourse"] = dict(W=problem.W.tolist(), q=problem.q.tolist())
    else:
        document["recourse_scenarios"] = [
            dict(W=scenario.W.tolist(), q=scenario.q.tolist(), weight=scenario.weight) for scenario in problem.scenarios
        ]
    document["distribution"] = distribution
    document["options"] = problem_file.options
    return document


def read_problem_file(file_path: Union[str, Path]) -> ProblemFile:
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"Problem file {file_path} does not exist.")
    return problem_from_dict(load_dict_from_file(file_path))


def write_problem_file(problem_file: ProblemFile, file_path: Union[str, Path]) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_text(json.dumps(problem_to_dict(problem_file), indent=2) + "\n")
    return file_path
