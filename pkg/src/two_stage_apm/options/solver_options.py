"""Solver options: editable YAML defaults layered with problem-file and command-line overrides."""
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from neuroconv.utils import dict_deep_update, load_dict_from_file

from two_stage_apm.exceptions import ProblemValidationError

DEFAULT_OPTIONS_PATH = Path(__file__).parent / "default_options.yaml"

MODES = ("g2apm", "lshaped", "meanvalue", "saa-ref")

# section of the options dictionary each field is read from
_SECTIONS = dict(
    mode="solver",
    eps="solver",
    max_iter="solver",
    relative_gap="solver",
    feasibility_cuts="solver",
    max_feasibility_cuts="solver",
    theta_lower_bound="solver",
    tol_geom="geometry",
    min_cell_probability="geometry",
    feasibility_tol="lp",
    optimality_tol="lp",
    num_samples="saa",
    num_replications="saa",
    confidence="saa",
    seed=None,
)


@dataclass(frozen=True)
class SolverOptions:
    mode: str = "g2apm"
    eps: float = 1e-6
    max_iter: int = 100
    relative_gap: bool = False
    feasibility_cuts: bool = False
    max_feasibility_cuts: int = 20
    theta_lower_bound: float = -1e6
    tol_geom: float = 1e-9
    min_cell_probability: float = 1e-12
    feasibility_tol: float = 1e-7
    optimality_tol: float = 1e-7
    num_samples: int = 10_000
    num_replications: int = 20
    confidence: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ProblemValidationError(f"Unknown mode '{self.mode}', expected one of {MODES}", path="solver.mode")
        if self.eps <= 0:
            raise ProblemValidationError(f"eps must be positive, got {self.eps}", path="solver.eps")
        if self.max_iter < 1:
            raise ProblemValidationError(f"max_iter must be at least 1, got {self.max_iter}", path="solver.max_iter")
        if not 0.0 < self.confidence < 1.0:
            raise ProblemValidationError(f"confidence must be in (0, 1), got {self.confidence}", path="saa.confidence")

    @classmethod
    def from_dict(cls, options: dict) -> "SolverOptions":
        """Build options from a nested dictionary laid out like ``default_options.yaml``."""
        values = dict()
        for section, content in options.items():
            if section == "seed":
                values["seed"] = int(content)
                continue
            if not isinstance(content, dict) or section not in set(_SECTIONS.values()):
                raise ProblemValidationError(f"Unknown options section '{section}'", path=section)
            for key, value in content.items():
                if _SECTIONS.get(key) != section:
                    raise ProblemValidationError(f"Unknown option '{key}'", path=f"{section}.{key}")
                values[key] = value
        field_types = {field.name: field.type for field in fields(cls)}
        for key, value in values.items():
            if field_types[key] in (float, "float") and isinstance(value, int) and not isinstance(value, bool):
                values[key] = float(value)
        return cls(**values)

    def to_dict(self) -> dict:
        """The nested dictionary form, inverse of ``from_dict``."""
        nested = dict()
        for key, value in asdict(self).items():
            section = _SECTIONS[key]
            if section is None:
                nested[key] = value
            else:
                nested.setdefault(section, dict())[key] = value
        return nested

    def with_overrides(self, **overrides) -> "SolverOptions":
        """Replace the given fields, ignoring the ones set to None."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})


def load_options(
    problem_options: Optional[dict] = None,
    overrides: Optional[dict] = None,
    options_file_path: Optional[Path] = None,
) -> SolverOptions:
    """
    Merge the YAML defaults, the ``options`` section of a problem file and command-line overrides, in that order.

    Parameters
    ----------
    problem_options : dict, optional
        Nested options from the problem file.
    overrides : dict, optional
        Nested options that take precedence over everything else.
    options_file_path : Path, optional
        An alternative defaults file, by default the package ``default_options.yaml``.
    """
    options = load_dict_from_file(options_file_path or DEFAULT_OPTIONS_PATH)
    if problem_options:
        options = dict_deep_update(options, problem_options, append_list=False)
    if overrides:
        options = dict_deep_update(options, overrides, append_list=False)
    return SolverOptions.from_dict(options)
