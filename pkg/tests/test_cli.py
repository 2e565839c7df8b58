import json

import pytest
from click.testing import CliRunner

from two_stage_apm.cli import apm
from two_stage_apm.problems import read_problem_file
from two_stage_apm.solve_problem import run

NEWSVENDOR_DOCUMENT = dict(
    name="newsvendor",
    first_stage=dict(c=[1.0]),
    recourse=dict(W=[[1.0, -1.0]], q=[3.0, 1.0]),
    distribution=dict(type="uniform_box", payload=dict(T=[[1.0]], h=[[0.0, 2.0]])),
    options=dict(solver=dict(eps=1e-7)),
)


@pytest.fixture
def newsvendor_file(tmp_path):
    file_path = tmp_path / "newsvendor.json"
    file_path.write_text(json.dumps(NEWSVENDOR_DOCUMENT))
    return file_path


def read_records(file_path):
    return [json.loads(line) for line in file_path.read_text().splitlines()]


def test_solve_writes_records(newsvendor_file, tmp_path):
    out_path = tmp_path / "records.jsonl"
    partition_path = tmp_path / "partition.jsonl"
    result = CliRunner().invoke(
        apm, ["solve", str(newsvendor_file), "--out", str(out_path), "--partition-out", str(partition_path)]
    )
    assert result.exit_code == 0, result.output
    assert "converged" in result.output
    assert "z_L" in result.output
    records = read_records(out_path)
    assert [record["record"] for record in records] == ["iteration", "iteration", "summary"]
    summary = records[-1]
    assert summary["status"] == "converged"
    assert summary["value"] == pytest.approx(2.0)
    assert summary["partition_size"] == len(read_records(partition_path))


def test_seeded_runs_write_identical_files(newsvendor_file, tmp_path):
    runner = CliRunner()
    outputs = []
    for run_index in range(2):
        out_path = tmp_path / f"run_{run_index}.jsonl"
        result = runner.invoke(apm, ["solve", str(newsvendor_file), "--seed", "3", "--out", str(out_path)])
        assert result.exit_code == 0, result.output
        outputs.append(out_path.read_bytes())
    assert outputs[0] == outputs[1]


def test_max_iter_exit_code(newsvendor_file):
    result = CliRunner().invoke(apm, ["solve", str(newsvendor_file), "--max-iter", "1"])
    assert result.exit_code == 2
    assert "max_iter" in result.output


@pytest.mark.parametrize("mode", ["lshaped", "meanvalue"])
def test_other_modes(newsvendor_file, mode):
    result = CliRunner().invoke(apm, ["solve", str(newsvendor_file), "--mode", mode])
    assert result.exit_code == 0, result.output
    assert f"[{mode}]" in result.output


def test_saa_reference_mode(tmp_path):
    document = dict(NEWSVENDOR_DOCUMENT, options=dict(saa=dict(num_samples=100, num_replications=3)))
    file_path = tmp_path / "small_saa.json"
    file_path.write_text(json.dumps(document))
    result = CliRunner().invoke(apm, ["solve", str(file_path), "--mode", "saa-ref", "--seed", "1"])
    assert result.exit_code == 0, result.output
    assert "SAA mean" in result.output


@pytest.mark.parametrize("problem", ["newsvendor", "random-discrete:1:2,3,99", "missing.json"])
def test_errors_exit_with_one(problem):
    result = CliRunner().invoke(apm, ["solve", problem])
    assert result.exit_code == 1
    assert "error" in result.output


def test_invalid_problem_file(tmp_path):
    file_path = tmp_path / "broken.json"
    file_path.write_text(json.dumps(dict(NEWSVENDOR_DOCUMENT, first_stage=dict())))
    result = CliRunner().invoke(apm, ["solve", str(file_path)])
    assert result.exit_code == 1
    assert "first_stage" in result.output


def test_export_builtin(tmp_path):
    out_path = tmp_path / "prodmix.json"
    result = CliRunner().invoke(apm, ["builtin", "prodmix", "--out", str(out_path)])
    assert result.exit_code == 0, result.output
    assert read_problem_file(out_path).problem.name == "prodmix"
    assert CliRunner().invoke(apm, ["builtin", "unknown", "--out", str(out_path)]).exit_code == 1


def test_run_report(newsvendor_file):
    report = run(newsvendor_file)
    assert report.converged
    assert report.exit_code == 0
    assert report.num_iterations == 2
    frame = report.to_frame()
    assert list(frame.index) == [1, 2]
    assert frame["z_upper"].iloc[-1] == pytest.approx(2.0)
    records = report.to_records()
    assert all("timings" not in record for record in records)
    assert set(report.timings) == {"master", "partition", "refinement", "upper_bound"}
    table = report.format_table()
    assert "|P|" in table
    assert "value 2.00" in table


def test_mean_value_report(newsvendor_file):
    report = run(newsvendor_file, mode="meanvalue")
    assert report.status == "completed"
    assert report.z_lower == pytest.approx(1.0)
    assert report.value == pytest.approx(2.0)
    assert report.incumbent == pytest.approx((1.0,))
