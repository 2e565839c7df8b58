import copy

import numpy as np
import pytest

from two_stage_apm.exceptions import ProblemValidationError
from two_stage_apm.measure import DiscreteAtoms, UniformBox
from two_stage_apm.options import SolverOptions, load_options
from two_stage_apm.problems import (
    builtin,
    cvar,
    parse_builtin_name,
    problem_from_dict,
    problem_to_dict,
    read_problem_file,
    write_problem_file,
)

NEWSVENDOR_DOCUMENT = dict(
    name="newsvendor",
    first_stage=dict(c=[1.0]),
    recourse=dict(W=[[1.0, -1.0]], q=[3.0, 1.0]),
    distribution=dict(type="uniform_box", payload=dict(T=[[1.0]], h=[[0.0, 2.0]])),
    options=dict(solver=dict(eps=1e-7)),
)


def invalid(document: dict, path: str):
    with pytest.raises(ProblemValidationError) as error:
        problem_from_dict(document)
    assert error.value.path == path
    return error.value


@pytest.mark.parametrize("name", ["prodmix", "cvar", "cvar:2", "lands-mini", "random-discrete:7:2,3,2"])
def test_builtins_survive_a_file(name, tmp_path):
    problem_file = builtin(name)
    file_path = write_problem_file(problem_file, tmp_path / f"{name.replace(':', '_')}.json")
    read_back = read_problem_file(file_path)
    prob, other = problem_file.problem, read_back.problem
    assert other.name == prob.name
    assert read_back.options == problem_file.options
    np.testing.assert_allclose(other.c, prob.c)
    np.testing.assert_allclose(other.A, prob.A)
    np.testing.assert_allclose(other.W, prob.W)
    np.testing.assert_allclose(other.q, prob.q)
    assert type(other.distribution) is type(prob.distribution)
    for expected, actual in zip(prob.distribution.total_mean(), other.distribution.total_mean()):
        np.testing.assert_allclose(actual, expected)
    np.testing.assert_array_equal(other.distribution.random_mask, prob.distribution.random_mask)


def test_newsvendor_document():
    problem_file = problem_from_dict(NEWSVENDOR_DOCUMENT)
    dist = problem_file.problem.distribution
    assert isinstance(dist, UniformBox)
    assert dist.num_random == 1
    assert problem_file.options == dict(solver=dict(eps=1e-7))
    document = problem_to_dict(problem_file)
    assert document["distribution"]["payload"] == dict(T=[[1.0]], h=[[0.0, 2.0]])


def test_atoms_document():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    document["distribution"] = dict(type="atoms", payload=dict(T=[[[1.0]], [[1.0]]], h=[[0.5], [1.5]], weights=[0.5, 0.5]))
    dist = problem_from_dict(document).problem.distribution
    assert isinstance(dist, DiscreteAtoms)
    assert dist.num_atoms == 2


def test_missing_cost_vector():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    del document["first_stage"]["c"]
    error = invalid(document, "first_stage")
    assert "'c'" in str(error)


def test_recourse_rows_must_match_h():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    document["recourse"]["W"] = [[1.0, -1.0], [0.0, 1.0]]
    invalid(document, "recourse.W")


def test_weights_must_sum_to_one():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    document["distribution"] = dict(type="atoms", payload=dict(T=[[[1.0]], [[1.0]]], h=[[0.5], [1.5]], weights=[0.5, 0.6]))
    invalid(document, "distribution.payload.weights")


def test_intervals_must_be_ordered():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    document["distribution"]["payload"]["h"] = [[2.0, 0.0]]
    invalid(document, "distribution.payload.h.0")


def test_recourse_and_scenarios_are_exclusive():
    document = copy.deepcopy(NEWSVENDOR_DOCUMENT)
    document["recourse_scenarios"] = [dict(W=[[1.0, -1.0]], q=[3.0, 1.0], weight=1.0)]
    with pytest.raises(ProblemValidationError):
        problem_from_dict(document)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_problem_file(tmp_path / "missing.json")


def test_builtin_names():
    assert parse_builtin_name("random-discrete:7:2,3,2") == ("random-discrete", ("7", "2,3,2"))
    assert parse_builtin_name("cvar:5") == ("cvar", ("5",))
    assert builtin("random-discrete:7:2,3,2").problem.name == "random-discrete:7:2,3,2"
    assert builtin("random-discrete", seed=7, sizes=(2, 3, 2)).problem.name == "random-discrete:7:2,3,2"


@pytest.mark.parametrize(
    "name",
    [
        "newsvendor",
        "random-discrete:7:2,3,11",
        "random-discrete:7:0,3,2",
        "random-discrete:x",
        "random-discrete:1:2,3",
        "cvar:x",
        "cvar:0",
        "cvar:3:2,3,2",
    ],
)
def test_bad_builtin_names(name):
    with pytest.raises(ProblemValidationError):
        builtin(name)


def test_cvar_alpha_is_checked():
    with pytest.raises(ProblemValidationError) as error:
        cvar(alpha=1.0)
    assert error.value.path == "alpha"


def test_default_options():
    options = load_options()
    assert options == SolverOptions()
    assert SolverOptions.from_dict(options.to_dict()) == options


def test_options_are_layered():
    options = load_options(
        problem_options=dict(solver=dict(eps=0.05, max_iter=7)),
        overrides=dict(solver=dict(max_iter=3), seed=11),
    )
    assert options.eps == 0.05
    assert options.max_iter == 3
    assert options.seed == 11
    assert options.num_samples == SolverOptions().num_samples


@pytest.mark.parametrize(
    "options, path",
    [
        (dict(solver=dict(bogus=1)), "solver.bogus"),
        (dict(solver=dict(tol_geom=1e-6)), "solver.tol_geom"),
        (dict(plotting=dict()), "plotting"),
        (dict(solver=dict(mode="simplex")), "solver.mode"),
        (dict(solver=dict(eps=-1.0)), "solver.eps"),
    ],
)
def test_invalid_options(options, path):
    with pytest.raises(ProblemValidationError) as error:
        load_options(problem_options=options)
    assert error.value.path == path


def test_grid_size_only_applies_to_cvar():
    assert builtin("cvar:4").problem.name == "cvar:4"
    assert builtin("cvar:4").problem.distribution.num_atoms == 64
    # the first argument of random-discrete is a seed
    assert builtin("random-discrete:4").problem.name == "random-discrete:4:2,3,2"
