"""End-to-end checks on the builtin instances and on batches of random discrete instances."""
import numpy as np
import pandas as pd
import pytest
from scipy.linalg import null_space

from two_stage_apm.options import SolverOptions, load_options
from two_stage_apm.partition import (
    adapted_partition,
    check_adapted,
    common_refinement,
    partition_from_atom_groups,
    problem_fans,
    trivial_partition,
)
from two_stage_apm.problems import builtin, random_discrete
from two_stage_apm.recourse import (
    RecourseScenario,
    TwoStageProblem,
    eval_VP,
    expected_recourse,
    extensive_form,
    subgradient_VP,
)
from two_stage_apm.solve_all_instances import solve_all_instances
from two_stage_apm.solvers import g2apm, iteration_bound, lshaped, saa_reference

PRODMIX_LOW, PRODMIX_HIGH = -17712.6, -17710.6

ORACLE_OPTIONS = SolverOptions(eps=1e-7, max_iter=500)


def random_instance(seed: int):
    """A random-discrete instance with every size between 1 and 6."""
    sizes = np.random.default_rng(1000 + seed).integers(1, 7, size=3)
    return random_discrete(seed=seed, sizes=tuple(int(size) for size in sizes)).problem


def simplex_points(rng, n: int, size: int) -> np.ndarray:
    """Points of the first-stage set {x >= 0, sum(x) = n} of the random-discrete instances."""
    return rng.dirichlet(np.ones(n), size=size) * n


def random_groups(rng, num_atoms: int, num_groups: int):
    labels = rng.integers(0, num_groups, size=num_atoms)
    return [np.flatnonzero(labels == label) for label in np.unique(labels)]


def assert_monotone(state, tol: float = 1e-6):
    lower = np.array([record.iteration_lower for record in state.history])
    upper = np.array([record.iteration_upper for record in state.history])
    slack = tol * (1.0 + np.abs(upper).max())
    # master values only grow as partitions are refined or cuts accumulate
    assert np.all(np.diff(lower) >= -slack)
    assert lower.max() <= upper.min() + slack
    running_lower = [record.z_lower for record in state.history]
    running_upper = [record.z_upper for record in state.history]
    np.testing.assert_allclose(running_lower, np.maximum.accumulate(lower), atol=slack)
    np.testing.assert_array_equal(running_upper, np.minimum.accumulate(upper))
    assert [record.k for record in state.history] == list(range(1, state.k + 1))


@pytest.fixture(scope="module")
def prodmix_state():
    problem_file = builtin("prodmix")
    return g2apm(problem_file.problem, options=load_options(problem_options=problem_file.options), max_iter=12)


@pytest.mark.slow
def test_prodmix_first_iteration(prodmix_state):
    first = prodmix_state.history[0]
    assert first.x == pytest.approx((1333.33, 66.67), abs=0.5)
    assert first.z_lower == pytest.approx(-18666.67, abs=0.5)
    assert first.z_upper == pytest.approx(-16939.71, abs=0.5)
    assert first.partition_size == 4


@pytest.mark.slow
def test_prodmix_bounds(prodmix_state):
    assert prodmix_state.converged
    assert prodmix_state.k <= 12
    assert PRODMIX_LOW <= prodmix_state.z_lower <= PRODMIX_HIGH
    assert PRODMIX_LOW <= prodmix_state.z_upper <= PRODMIX_HIGH
    assert len(prodmix_state.partition) <= 150
    assert_monotone(prodmix_state)


@pytest.mark.slow
def test_prodmix_sample_average_approximation(prodmix_state):
    assert -17713.2 <= prodmix_state.value <= -17708.8
    result = saa_reference(builtin("prodmix").problem, num_samples=10_000, num_replications=20, seed=0)
    assert abs(result.mean - prodmix_state.value) <= 3.0 * result.radius + 1.0


def test_cvar_fan_and_partition():
    prob = builtin("cvar").problem
    fan = problem_fans(prob)[0]
    assert sorted(cone.dim for cone in fan.cones) == [0, 1, 1]
    # D = [0, 1]: the vertex 1 (row 0 tight) has normal cone psi >= 0, the vertex 0 has psi <= 0, D itself has {0}
    hreps = {cone.face_id: cone.hrep for cone in fan.cones}
    assert set(hreps) == {(), (0,), (1,)}
    for face_id, sign in [((0,), -1.0), ((1,), 1.0)]:
        half_line = hreps[face_id]
        assert half_line.num_rows == 1
        assert not half_line.eqs
        np.testing.assert_allclose(half_line.A, [[sign]], atol=1e-12)
        np.testing.assert_allclose(half_line.b, [0.0])
    origin = hreps[()]
    assert origin.num_rows == 1
    assert origin.eqs == frozenset({0})
    np.testing.assert_allclose(np.abs(origin.A), [[1.0]], atol=1e-12)
    np.testing.assert_allclose(origin.b, [0.0])
    # loss -r^T x crosses tau = -0.03 inside the return box
    x = np.array([0.5, 0.3, 0.2, 0.0, 0.03, 0.0])
    partition = adapted_partition(prob, x)
    assert len(partition) == 2
    assert partition.total_probability == pytest.approx(1.0)


@pytest.mark.slow
def test_cvar_solvers_agree_with_the_extensive_form():
    prob = builtin("cvar:3").problem
    exact, _ = extensive_form(prob)
    for solver in (g2apm, lshaped):
        state = solver(prob, options=ORACLE_OPTIONS)
        assert state.converged
        assert state.value == pytest.approx(exact, abs=1e-6 * (1.0 + abs(exact)))


@pytest.mark.slow
def test_lands_mini_solvers_agree():
    prob = builtin("lands-mini").problem
    options = SolverOptions(eps=1e-4, max_iter=200)
    partitions = g2apm(prob, options=options)
    cuts = lshaped(prob, options=options)
    assert partitions.converged
    assert cuts.converged
    assert partitions.value == pytest.approx(cuts.value, abs=1e-3)
    assert_monotone(partitions)
    assert_monotone(cuts)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_extensive_form_oracle(seed):
    prob = random_instance(seed)
    exact, _ = extensive_form(prob)
    fans = problem_fans(prob)
    for solver in (g2apm, lshaped):
        state = solver(prob, options=ORACLE_OPTIONS, fans=fans)
        assert state.converged
        assert abs(state.value - exact) <= 1e-6 * (1.0 + abs(state.value))
        assert_monotone(state)


@pytest.mark.parametrize("seed", range(10))
def test_adapted_partitions_are_exact(seed):
    prob = random_instance(seed)
    rng = np.random.default_rng(seed)
    fans = problem_fans(prob)
    for x in simplex_points(rng, prob.num_first_stage, 10):
        partition = adapted_partition(prob, x, fans)
        assert check_adapted(prob, x, partition, fans)
        value, _ = eval_VP(prob, x, partition.stats)
        exact = expected_recourse(prob, x)
        assert value == pytest.approx(exact, rel=1e-7, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_aggregation_bound_chain(seed):
    prob = random_instance(seed)
    dist = prob.distribution
    rng = np.random.default_rng(seed)
    mean_stats = trivial_partition(dist).stats
    for _ in range(50):
        coarse = partition_from_atom_groups(dist, random_groups(rng, dist.num_atoms, 3))
        other = partition_from_atom_groups(dist, random_groups(rng, dist.num_atoms, 3))
        fine = common_refinement(coarse, other, dist)
        x = simplex_points(rng, prob.num_first_stage, 1)[0]
        coarse_value, _ = eval_VP(prob, x, coarse.stats)
        fine_value, _ = eval_VP(prob, x, fine.stats)
        mean_value, _ = eval_VP(prob, x, mean_stats)
        exact = expected_recourse(prob, x)
        assert mean_value <= coarse_value + 1e-8
        assert coarse_value <= fine_value + 1e-8
        assert fine_value <= exact + 1e-8


def test_aggregation_across_a_kink_is_strictly_lower(discrete_newsvendor):
    x = np.array([1.0])
    partition = trivial_partition(discrete_newsvendor.distribution)
    assert not check_adapted(discrete_newsvendor, x, partition)
    value, _ = eval_VP(discrete_newsvendor, x, partition.stats)
    assert value < expected_recourse(discrete_newsvendor, x) - 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_subgradients_support_the_expected_recourse(seed):
    prob = random_instance(seed)
    rng = np.random.default_rng(seed)
    n = prob.num_first_stage
    x = simplex_points(rng, n, 1)[0]
    partition = adapted_partition(prob, x)
    value, duals = eval_VP(prob, x, partition.stats)
    g = subgradient_VP(prob, x, partition.stats, duals)
    for y in simplex_points(rng, n, 100):
        assert expected_recourse(prob, y) >= value + g @ (y - x) - 1e-7 * (1.0 + abs(value))


def test_subgradient_matches_finite_differences(discrete_newsvendor):
    # V is differentiable at 0.8 with slope 0.5 - 1.5
    x = np.array([0.8])
    partition = adapted_partition(discrete_newsvendor, x)
    _, duals = eval_VP(discrete_newsvendor, x, partition.stats)
    g = subgradient_VP(discrete_newsvendor, x, partition.stats, duals)
    step = 1e-4
    forward, _ = eval_VP(discrete_newsvendor, x + step, partition.stats)
    backward, _ = eval_VP(discrete_newsvendor, x - step, partition.stats)
    assert g[0] == pytest.approx((forward - backward) / (2 * step), abs=1e-3)


def discrete_case(kind: str, seed: int):
    """A random-discrete instance with a two-dimensional first-stage simplex, optionally with two recourse costs."""
    prob = random_discrete(seed=seed, sizes=(3, 4, 3)).problem
    if kind == "single":
        return prob
    base = prob.scenarios[0]
    rescaled = base.q * np.random.default_rng(seed).uniform(0.5, 1.5, size=base.q.shape[0])
    scenarios = (
        RecourseScenario(W=base.W, q=base.q, weight=0.6),
        RecourseScenario(W=base.W, q=rescaled, weight=0.4),
    )
    return TwoStageProblem(
        c=prob.c, A=prob.A, b=prob.b, scenarios=scenarios, distribution=prob.distribution, name=f"{prob.name}+costs"
    )


@pytest.mark.parametrize("kind", ["single", "two-costs"])
@pytest.mark.parametrize("seed", range(4))
def test_partitions_straddling_cones_are_strictly_lower(kind, seed):
    prob = discrete_case(kind, seed)
    dist = prob.distribution
    rng = np.random.default_rng(seed)
    fans = problem_fans(prob)
    num_straddling = 0
    for x in simplex_points(rng, prob.num_first_stage, 10):
        exact = expected_recourse(prob, x)
        candidates = [trivial_partition(dist)]
        candidates += [partition_from_atom_groups(dist, random_groups(rng, dist.num_atoms, 2)) for _ in range(5)]
        for partition in candidates:
            if check_adapted(prob, x, partition, fans):
                continue
            num_straddling += 1
            value, _ = eval_VP(prob, x, partition.stats)
            assert value < exact - 1e-9 * (1.0 + abs(exact))
    assert num_straddling > 0


@pytest.mark.parametrize("kind", ["single", "two-costs"])
@pytest.mark.parametrize("seed", range(4))
def test_subgradients_match_directional_differences(kind, seed):
    prob = discrete_case(kind, seed)
    x = simplex_points(np.random.default_rng(seed), prob.num_first_stage, 1)[0]
    partition = adapted_partition(prob, x)
    _, duals = eval_VP(prob, x, partition.stats)
    g = subgradient_VP(prob, x, partition.stats, duals)
    step = 1e-5
    # directions that keep sum(x) = n
    for direction in null_space(prob.A).T:
        forward = expected_recourse(prob, x + step * direction)
        backward = expected_recourse(prob, x - step * direction)
        slope = (forward - backward) / (2 * step)
        assert g @ direction == pytest.approx(slope, abs=1e-4 * (1.0 + abs(slope)))


@pytest.mark.slow
def test_lands_mini_subgradient_and_straddling_partition():
    prob = builtin("lands-mini").problem
    fans = problem_fans(prob)
    x = np.array([3.3, 7.1, 2.3, 0.7, 0.5])
    assert prob.is_first_stage_feasible(x)

    def exact_value(y):
        return eval_VP(prob, y, adapted_partition(prob, y, fans).stats)[0]

    partition = adapted_partition(prob, x, fans)
    value, duals = eval_VP(prob, x, partition.stats)
    # the cheap capacities run out inside the demand range, so the whole support straddles two cones
    assert len(partition) >= 2
    whole = trivial_partition(prob.distribution)
    assert not check_adapted(prob, x, whole, fans)
    assert eval_VP(prob, x, whole.stats)[0] < value - 1e-9 * (1.0 + abs(value))

    g = subgradient_VP(prob, x, partition.stats, duals)
    step = 1e-4
    for direction in null_space(prob.A).T:
        slope = (exact_value(x + step * direction) - exact_value(x - step * direction)) / (2 * step)
        assert g @ direction == pytest.approx(slope, abs=1e-3 * (1.0 + abs(slope)))


def estimate_lipschitz_and_diameter(prob, cuts):
    """
    L from the exact cut gradients of c^T x + V(x), M as the diameter n sqrt(2) of {x >= 0, sum(x) = n}.

    Both are floored away from zero, which iteration_bound rejects.
    """
    n = prob.num_first_stage
    L = max(max(float(np.linalg.norm(prob.c + g)) for g, _ in cuts), 1e-6)
    M = n * np.sqrt(2.0) if n > 1 else 1.0
    return L, M


@pytest.mark.parametrize("seed", range(5))
def test_runs_stay_within_the_iteration_bound(seed):
    prob = random_instance(seed)
    cutting_planes = lshaped(prob, options=ORACLE_OPTIONS)
    L, M = estimate_lipschitz_and_diameter(prob, cutting_planes.cut_pool.optimality_cuts)
    bound = iteration_bound(prob.num_first_stage, L, M, ORACLE_OPTIONS.eps)
    assert cutting_planes.k <= bound
    assert g2apm(prob, options=ORACLE_OPTIONS).k <= bound


def test_solve_all_instances(tmp_path):
    summary = solve_all_instances(seeds=range(3), sizes=(2, 2, 2), output_folder_path=tmp_path)
    assert (tmp_path / "summary.csv").exists()
    assert len(summary) == 3
    assert (summary["g2apm_error"] <= 1e-6).all()
    assert (summary["lshaped_error"] <= 1e-6).all()
    written = pd.read_csv(tmp_path / "summary.csv", index_col="instance")
    assert list(written.index) == list(summary.index)
