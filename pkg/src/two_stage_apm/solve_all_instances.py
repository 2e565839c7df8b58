"""Solve a batch of random discrete instances with both solvers and compare them with the extensive form."""
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import pandas as pd
from tqdm import tqdm

from two_stage_apm.exceptions import APMError
from two_stage_apm.options import SolverOptions
from two_stage_apm.partition import problem_fans
from two_stage_apm.problems import random_discrete
from two_stage_apm.recourse import extensive_form
from two_stage_apm.solvers import g2apm, lshaped

logger = logging.getLogger(__name__)


def solve_instance(seed: int, sizes: Sequence[int], options: SolverOptions) -> dict:
    """One row of the summary: the extensive-form value and, per solver, its value, status and iteration count."""
    prob = random_discrete(seed=seed, sizes=sizes).problem
    row = dict(instance=prob.name, num_atoms=prob.distribution.num_atoms)
    row["extensive_form"], _ = extensive_form(prob, options=options)
    fans = problem_fans(prob, tol=options.tol_geom)
    for method, solver in (("g2apm", g2apm), ("lshaped", lshaped)):
        state = solver(prob, options=options, fans=fans)
        row[f"{method}_value"] = state.z_upper
        row[f"{method}_converged"] = state.converged
        row[f"{method}_iterations"] = state.k
        row[f"{method}_error"] = abs(state.z_upper - row["extensive_form"])
        row[f"{method}_partition_size"] = len(state.partition)
    return row


def solve_all_instances(
    seeds: Iterable[int],
    sizes: Sequence[int],
    output_folder_path: Union[str, Path],
    options: Optional[SolverOptions] = None,
) -> pd.DataFrame:
    """
    Solve random-discrete instances for every seed and write ``summary.csv`` in the output folder.

    Parameters
    ----------
    seeds : iterable of int
        The instance seeds.
    sizes : (n, m, l)
        The instance sizes.
    output_folder_path : str or Path
        The folder where the summary table is written.
    options : SolverOptions, optional
        By default ``SolverOptions(eps=1e-7)``.

    Returns
    -------
    pandas.DataFrame
        One row per instance, indexed by the instance name.
    """
    options = options or SolverOptions(eps=1e-7)
    output_folder_path = Path(output_folder_path)
    output_folder_path.mkdir(parents=True, exist_ok=True)
    seeds = list(seeds)

    rows = []
    progress_bar = tqdm(seeds, desc=f"Solving {len(seeds)} instances", position=0, total=len(seeds), dynamic_ncols=True)
    for seed in progress_bar:
        progress_bar.set_description(f"Solving random-discrete:{seed}")
        try:
            rows.append(solve_instance(seed=seed, sizes=sizes, options=options))
        except APMError as error:
            logger.warning(f"Skipping seed {seed}: {error}")

    summary = pd.DataFrame.from_records(rows)
    if not summary.empty:
        summary = summary.set_index("instance")
    summary.to_csv(output_folder_path / "summary.csv")
    return summary


if __name__ == "__main__":

    # Parameters for the batch

    # The instance seeds.
    seeds = range(20)
    # (n, m, l): first-stage variables, core recourse columns, recourse rows.
    sizes = (2, 3, 2)
    # The folder where summary.csv is written.
    output_folder_path = Path("~/apm_results/random_discrete").expanduser()

    summary = solve_all_instances(seeds=seeds, sizes=sizes, output_folder_path=output_folder_path)
    print(summary.describe())
