"""The ``apm`` command line: ``apm solve`` and ``apm builtin``."""
import logging
from pathlib import Path

import click

from two_stage_apm.exceptions import APMError
from two_stage_apm.options import MODES
from two_stage_apm.problems import BUILTIN_NAMES, builtin, write_problem_file
from two_stage_apm.solve_problem import run

ERROR_EXIT_CODE = 1


@click.group()
def apm():
    """Two-stage stochastic linear programs solved by adaptive partitions."""


@apm.command()
@click.argument("problem")
@click.option("--mode", type=click.Choice(MODES), default=None, help="Solver mode, by default from the options.")
@click.option("--eps", type=float, default=None, help="Stopping gap z_U - z_L.")
@click.option("--max-iter", type=int, default=None, help="Iteration cap.")
@click.option("--seed", type=int, default=None, help="Seed of the saa-ref mode.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--partition-out", "partition_out_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--options", "options_file_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--verbose/--quiet", default=False, help="Log one line per iteration.")
@click.pass_context
def solve(ctx, problem, mode, eps, max_iter, seed, out_path, partition_out_path, options_file_path, verbose):
    """Solve PROBLEM, a JSON problem file or a builtin name."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        report = run(
            problem=problem,
            mode=mode,
            eps=eps,
            max_iter=max_iter,
            seed=seed,
            out_path=out_path,
            partition_out_path=partition_out_path,
            options_file_path=options_file_path,
            verbose=verbose,
        )
    except (APMError, ValueError, FileNotFoundError) as error:
        click.echo(f"error: {error}", err=True)
        ctx.exit(ERROR_EXIT_CODE)
    click.echo(report.format_table())
    ctx.exit(report.exit_code)


@apm.command(name="builtin")
@click.argument("name")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.pass_context
def export_builtin(ctx, name, out_path):
    """Write the builtin instance NAME as a problem file."""
    try:
        problem_file = builtin(name)
    except APMError as error:
        click.echo(f"error: {error} (builtins: {', '.join(BUILTIN_NAMES)})", err=True)
        ctx.exit(ERROR_EXIT_CODE)
    write_problem_file(problem_file, out_path)
    click.echo(f"{problem_file.problem.name} written to {out_path}")


def main():
    apm()
