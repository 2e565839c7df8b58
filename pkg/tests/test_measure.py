import logging

import numpy as np
import pytest

from two_stage_apm.exceptions import StructuralError
from two_stage_apm.geometry import HRep
from two_stage_apm.measure import DiscreteAtoms, UniformBox, cell_stats, sample, total_mean
from two_stage_apm.problems import prodmix


@pytest.fixture
def unit_square_law():
    """h uniform on [0, 1]^2 with a fixed 2 x 1 technology."""
    return UniformBox.fixed_technology_law(T=np.ones((2, 1)), h_low=np.zeros(2), h_high=np.ones(2))


def test_prodmix_total_mean():
    T, h = total_mean(prodmix().problem.distribution)
    np.testing.assert_allclose(T, [[4.0, 10.0], [1.0, 40.0]])
    np.testing.assert_allclose(h, [6000.0, 4000.0])


def test_half_interval():
    law = UniformBox.fixed_technology_law(T=np.ones((1, 1)), h_low=np.zeros(1), h_high=np.full(1, 2.0))
    stats = cell_stats(law, HRep(A=np.array([[1.0]]), b=np.array([1.0])))
    assert stats.prob == pytest.approx(0.5)
    np.testing.assert_allclose(stats.mean_h, [0.5])
    np.testing.assert_allclose(stats.mean_T, [[1.0]])


def test_triangle_cell(unit_square_law):
    stats = unit_square_law.cell_stats(HRep(A=np.array([[1.0, 1.0]]), b=np.array([1.0])))
    assert stats.prob == pytest.approx(0.5)
    np.testing.assert_allclose(stats.mean_h, [1 / 3, 1 / 3])


def test_independent_blocks(unit_square_law):
    # a box cell factorizes into two one-dimensional groups
    cell = HRep(A=np.array([[1.0, 0.0], [0.0, -1.0]]), b=np.array([0.25, -0.5]))
    stats = unit_square_law.cell_stats(cell)
    assert stats.prob == pytest.approx(0.125)
    np.testing.assert_allclose(stats.mean_h, [0.125, 0.75])


def test_whole_space_and_empty_cells(unit_square_law):
    whole = unit_square_law.cell_stats(None)
    assert whole.prob == 1.0
    np.testing.assert_allclose(whole.mean_h, [0.5, 0.5])
    empty = unit_square_law.cell_stats(HRep(A=np.array([[1.0, 0.0]]), b=np.array([-1.0])))
    assert empty.prob == 0.0
    assert not empty.defined


def test_equality_cells_have_no_mass(unit_square_law):
    line = HRep(A=np.array([[1.0, -1.0]]), b=np.array([0.0]), eqs=frozenset({0}))
    assert unit_square_law.cell_stats(line).prob == 0.0


def test_cell_coupling_technology_and_rhs():
    # T ~ U[0, 1] and h ~ U[0, 1]; the cell {h <= T x} at x = 1 in flat coordinates (T, h)
    law = UniformBox(T_low=np.zeros((1, 1)), T_high=np.ones((1, 1)), h_low=np.zeros(1), h_high=np.ones(1))
    stats = law.cell_stats(HRep(A=np.array([[-1.0, 1.0]]), b=np.array([0.0])))
    assert stats.prob == pytest.approx(0.5)
    np.testing.assert_allclose(stats.mean_T, [[2 / 3]])
    np.testing.assert_allclose(stats.mean_h, [1 / 3])


def test_cell_stats_match_monte_carlo(rng):
    law = prodmix().problem.distribution
    x = np.array([1333.33, 66.67])
    # second coupling row active: h2 - T2 x >= 0
    row = np.zeros(law.flat_dim)
    row[2:4] = x
    row[5] = -1.0
    cell = HRep(A=row[None, law.random_mask], b=np.zeros(1))
    stats = law.cell_stats(cell)
    draws = law.sample(rng, 100_000)
    inside = draws.atoms_in(cell)
    std = np.sqrt(stats.prob * (1.0 - stats.prob) / inside.size)
    assert abs(inside.mean() - stats.prob) <= 3 * std + 1e-12
    if stats.prob > 0.01:
        np.testing.assert_allclose(draws.h[inside].mean(axis=0), stats.mean_h, rtol=1e-3)


def test_discrete_atoms_stats():
    law = DiscreteAtoms(
        T=np.ones((3, 1, 1)),
        h=np.array([[0.0], [1.0], [2.0]]),
        weights=np.array([0.2, 0.3, 0.5]),
    )
    assert law.num_random == 1
    stats = law.cell_stats(members=frozenset({1, 2}))
    assert stats.prob == pytest.approx(0.8)
    np.testing.assert_allclose(stats.mean_h, [(0.3 + 1.0) / 0.8])
    cell = HRep(A=np.array([[1.0]]), b=np.array([1.0]))
    assert law.cell_stats(cell).prob == pytest.approx(0.5)
    assert law.cell_stats(cell, strict_rows={0}).prob == pytest.approx(0.2)


def test_discrete_atoms_validation():
    with pytest.raises(StructuralError):
        DiscreteAtoms(T=np.ones((2, 1, 1)), h=np.zeros((2, 1)), weights=np.array([0.5, 0.6]))
    with pytest.raises(StructuralError):
        DiscreteAtoms(T=np.ones((2, 1, 1)), h=np.zeros((3, 1)), weights=np.array([0.5, 0.5]))


def test_uniform_box_validation():
    with pytest.raises(StructuralError):
        UniformBox(T_low=np.ones((1, 1)), T_high=np.zeros((1, 1)), h_low=np.zeros(1), h_high=np.ones(1))


def test_flatten_round_trip():
    law = prodmix().problem.distribution
    T, h = np.arange(4.0).reshape(2, 2), np.array([10.0, 11.0])
    flat = law.flatten(T, h)
    np.testing.assert_allclose(flat, [0.0, 1.0, 2.0, 3.0, 10.0, 11.0])
    T_back, h_back = law.unflatten(flat)
    np.testing.assert_allclose(T_back, T)
    np.testing.assert_allclose(h_back, h)
    np.testing.assert_allclose(law.random_coordinates(flat), flat)


def test_sampling_is_seeded():
    law = prodmix().problem.distribution
    first = sample(law, np.random.default_rng(3), 50)
    second = sample(law, np.random.default_rng(3), 50)
    np.testing.assert_array_equal(first.h, second.h)
    assert first.num_atoms == 50
    assert first.weights.sum() == pytest.approx(1.0)


def test_discretize_keeps_the_mean():
    law = prodmix().problem.distribution
    grid = law.discretize(3)
    assert grid.num_atoms == 3**6
    T, h = grid.total_mean()
    np.testing.assert_allclose(T, [[4.0, 10.0], [1.0, 40.0]])
    np.testing.assert_allclose(h, [6000.0, 4000.0])


def test_slab_masses_and_dropped_slivers(caplog):
    law = UniformBox.fixed_technology_law(T=np.ones((3, 1)), h_low=np.zeros(3), h_high=np.ones(3))

    def slab(width):
        return HRep(A=np.array([[-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]]), b=np.array([-1.0, 1.0 + width]))

    assert law.cell_stats(slab(1e-4)).prob == pytest.approx(5.0005e-05, rel=1e-6)
    with caplog.at_level(logging.DEBUG, logger="two_stage_apm.measure.distributions"):
        sliver = law.cell_stats(slab(1e-8))
    assert sliver.prob == 0.0
    assert "has no 3-dimensional volume" in caplog.text
