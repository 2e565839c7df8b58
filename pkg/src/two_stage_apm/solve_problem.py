"""Primary entry point: solve one problem file or builtin instance in one of the four modes."""
import logging
from pathlib import Path
from typing import Optional, Union

from two_stage_apm.options import SolverOptions, load_options
from two_stage_apm.partition import trivial_partition
from two_stage_apm.problems import ProblemFile, builtin, read_problem_file
from two_stage_apm.report import RunReport
from two_stage_apm.solvers import g2apm, lshaped, mean_value, saa_reference

logger = logging.getLogger(__name__)


def resolve_problem(problem: Union[ProblemFile, str, Path]) -> ProblemFile:
    """A ProblemFile is used as is; an existing path or a ``.json`` name is read; anything else is a builtin name."""
    if isinstance(problem, ProblemFile):
        return problem
    path = Path(problem)
    if path.exists() or path.suffix == ".json":
        return read_problem_file(path)
    return builtin(str(problem))


def run_options(
    problem_file: ProblemFile,
    mode: Optional[str] = None,
    eps: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: Optional[int] = None,
    options_file_path: Optional[Path] = None,
) -> SolverOptions:
    """The YAML defaults, overridden by the problem file options, overridden by the explicit arguments."""
    solver = {key: value for key, value in dict(mode=mode, eps=eps, max_iter=max_iter).items() if value is not None}
    overrides = dict(solver=solver)
    if seed is not None:
        overrides.update(seed=seed)
    return load_options(problem_options=problem_file.options, overrides=overrides, options_file_path=options_file_path)


def run(
    problem: Union[ProblemFile, str, Path],
    mode: Optional[str] = None,
    eps: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed: Optional[int] = None,
    out_path: Optional[Union[str, Path]] = None,
    partition_out_path: Optional[Union[str, Path]] = None,
    options_file_path: Optional[Path] = None,
    verbose: bool = False,
) -> RunReport:
    """
    Solve a problem and optionally write the structured results.

    Parameters
    ----------
    problem : ProblemFile, str or Path
        A problem, the path of a JSON problem file or a builtin name such as ``prodmix`` or ``random-discrete:7:2,3,2``.
    mode : {"g2apm", "lshaped", "meanvalue", "saa-ref"}, optional
        By default the ``solver.mode`` option.
    eps : float, optional
        Overrides ``solver.eps``.
    max_iter : int, optional
        Overrides ``solver.max_iter``.
    seed : int, optional
        Overrides ``seed`` (only the saa-ref mode draws random numbers).
    out_path : str or Path, optional
        Where to write one JSON record per iteration followed by a summary record.
    partition_out_path : str or Path, optional
        Where to write one JSON record per cell of the final partition.
    options_file_path : Path, optional
        An alternative defaults file.
    verbose : bool, default: False
        Log one line per iteration.

    Returns
    -------
    RunReport
    """
    problem_file = resolve_problem(problem)
    prob = problem_file.problem
    options = run_options(problem_file, mode, eps, max_iter, seed, options_file_path)
    logger.debug(f"Solving {prob!r} in mode {options.mode} with {options}")

    if options.mode == "g2apm":
        report = RunReport.from_state(prob.name, g2apm(prob, options=options, verbose=verbose))
    elif options.mode == "lshaped":
        report = RunReport.from_state(prob.name, lshaped(prob, options=options, verbose=verbose))
    elif options.mode == "meanvalue":
        result = mean_value(prob, options=options)
        report = RunReport.from_mean_value(prob.name, result, partition=trivial_partition(prob.distribution))
    else:
        report = RunReport.from_saa(prob.name, saa_reference(prob, options=options))

    if out_path is not None:
        report.write_records(out_path)
    if partition_out_path is not None:
        report.write_partition(partition_out_path)
    return report


if __name__ == "__main__":

    # Parameters for the run

    # A builtin name or the path of a JSON problem file.
    problem = "prodmix"
    # One of g2apm, lshaped, meanvalue, saa-ref.
    mode = "g2apm"
    # The stopping gap, by default the value in the problem options.
    eps = None
    # The folder where the structured results are written.
    output_folder_path = Path("~/apm_results").expanduser()
    if not output_folder_path.exists():
        output_folder_path.mkdir(parents=True)

    logging.basicConfig(level=logging.INFO)
    report = run(
        problem=problem,
        mode=mode,
        eps=eps,
        out_path=output_folder_path / f"{problem}_{mode}.jsonl",
        partition_out_path=output_folder_path / f"{problem}_{mode}_partition.jsonl",
        verbose=True,
    )
    print(report.format_table())
