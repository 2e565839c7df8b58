import numpy as np
import pytest

from two_stage_apm.exceptions import DualInfeasibleError, NumericalDegeneracyError
from two_stage_apm.geometry import HRep, classify_point, normal_fan, optimal_vertex_mask
from two_stage_apm.recourse import solve_lp
from two_stage_apm.recourse.linear_programs import UNBOUNDED


def dual_set(W: np.ndarray, q: np.ndarray) -> HRep:
    return HRep(A=np.asarray(W, dtype=float).T, b=np.asarray(q, dtype=float))


@pytest.fixture
def segment_fan():
    """D = [0, 1] from W = [1, -1], q = (1, 0)."""
    return normal_fan(dual_set([[1.0, -1.0]], [1.0, 0.0]))


@pytest.fixture
def square_fan():
    """D = [0, 1]^2 from W = [I, -I], q = (1, 1, 0, 0)."""
    return normal_fan(dual_set(np.hstack([np.eye(2), -np.eye(2)]), [1.0, 1.0, 0.0, 0.0]))


def test_segment_fan(segment_fan):
    assert len(segment_fan) == 3
    assert len(segment_fan.maximal) == 2
    assert [cone.dim for cone in segment_fan.cones] == [1, 1, 0]
    assert segment_fan.coverage.num_rows == 0


def test_segment_classification(segment_fan):
    # row 0 (lambda <= 1) is tight at the vertex 1, which is optimal for psi > 0
    assert segment_fan.cones[classify_point(segment_fan, np.array([0.5]))].face_id == (0,)
    assert segment_fan.cones[classify_point(segment_fan, np.array([-0.5]))].face_id == (1,)
    origin = segment_fan.cones[classify_point(segment_fan, np.array([0.0]))]
    assert origin.face_id == ()
    assert origin.dim == 0
    assert origin.face_dim == 1


def test_square_fan(square_fan):
    dims = sorted(cone.dim for cone in square_fan.cones)
    assert dims == [0, 1, 1, 1, 1, 2, 2, 2, 2]
    assert len(square_fan.maximal) == 4
    index = classify_point(square_fan, np.array([1.0, -2.0]))
    assert square_fan.cones[index].face_id == (0, 3)
    assert index in square_fan.maximal
    ray = square_fan.cones[classify_point(square_fan, np.array([0.0, 3.0]))]
    assert ray.dim == 1
    assert ray.face_id == (1,)


def test_cone_hrep_is_homogeneous(square_fan):
    for cone in square_fan.cones:
        assert np.all(cone.hrep.b == 0.0)
        assert cone.hrep.ambient_dim == 2


def test_relative_interiors_are_disjoint(square_fan, rng):
    for psi in rng.normal(size=(500, 2)):
        index = classify_point(square_fan, psi)
        cone = square_fan.cones[index]
        assert cone.hrep.contains(psi[None, :], tol=1e-9).all()
        strictly_inside = [
            i
            for i in square_fan.maximal
            if square_fan.cones[i].hrep.contains(psi[None, :], strict_rows=square_fan.cones[i].hrep.inequality_rows).all()
        ]
        assert strictly_inside == [index]


def test_singleton_dual_set():
    # W = [I, -I], q = (a, -a) pins lambda = a
    a = np.array([1.0, -2.0])
    fan = normal_fan(dual_set(np.hstack([np.eye(2), -np.eye(2)]), np.concatenate([a, -a])))
    assert len(fan) == 1
    assert fan.cones[0].dim == 2
    np.testing.assert_allclose(fan.dual_vrep.vertices, [a])
    assert classify_point(fan, np.array([3.0, -7.0])) == 0


def test_unbounded_dual_set_coverage():
    # D = {lambda <= 1}: the support function is finite on psi >= 0 only
    fan = normal_fan(dual_set([[1.0]], [1.0]))
    assert len(fan) == 2
    assert fan.coverage.contains(np.array([[2.0]])).all()
    assert not fan.coverage.contains(np.array([[-1.0]])).any()
    assert classify_point(fan, np.array([-1.0])) is None
    assert optimal_vertex_mask(fan, np.array([-1.0])) is None
    assert fan.cones[classify_point(fan, np.array([2.0]))].face_id == (0,)


def test_empty_dual_set():
    with pytest.raises(DualInfeasibleError, match="dual infeasible"):
        normal_fan(dual_set([[1.0, -1.0]], [-1.0, -1.0]))


def test_optimal_vertex_mask(square_fan):
    vertices = square_fan.dual_vrep.vertices
    mask = optimal_vertex_mask(square_fan, np.array([1.0, 0.0]))
    np.testing.assert_allclose(vertices[mask][:, 0], 1.0)
    assert mask.sum() == 2


def test_degenerate_direction_is_reported(square_fan):
    # within a loose tolerance three vertices look optimal, which is not a face of the square
    with pytest.raises(NumericalDegeneracyError) as error:
        classify_point(square_fan, np.array([1.0, 1.0]), tol=0.5)
    assert len(error.value.candidates) == 2


def test_conic_dual_set():
    # W = -I, q = 0: D is the nonnegative quadrant with its apex at the origin
    fan = normal_fan(dual_set(-np.eye(2), np.zeros(2)))
    np.testing.assert_allclose(fan.dual_vrep.vertices, [[0.0, 0.0]], atol=1e-12)
    assert sorted(cone.face_id for cone in fan.cones) == [(), (0,), (0, 1), (1,)]
    assert fan.cones[classify_point(fan, np.array([-1.0, -2.0]))].face_id == (0, 1)
    assert fan.cones[classify_point(fan, np.array([0.0, -1.0]))].face_id == (1,)
    assert classify_point(fan, np.array([1.0, -1.0])) is None
    assert fan.coverage.contains(np.array([[-1.0, -3.0]])).all()


def random_dual_set(rng, dim: int, num_rows: int):
    """A nonempty D with num_rows random facets around a random interior point."""
    W = rng.normal(size=(dim, num_rows))
    center = rng.normal(size=dim)
    q = W.T @ center + rng.uniform(0.2, 1.0, size=num_rows)
    return W, q


def optimal_face_by_lp(W: np.ndarray, q: np.ndarray, psi: np.ndarray, tol: float = 1e-4):
    """Rows tight on the whole optimal face of max psi^T lambda over D, or None when the maximum is infinite."""
    A = W.T
    result = solve_lp(-psi, A_ub=A, b_ub=q, bounds=(None, None), feasibility_tol=1e-9, optimality_tol=1e-9)
    if result.status == UNBOUNDED:
        return None
    value = -result.value
    on_face = np.vstack([A, -psi])
    face_rhs = np.append(q, -value + 1e-8 * (1.0 + abs(value)))
    tight = []
    for row in range(A.shape[0]):
        # the row is tight on the face when its largest slack there is zero
        lowest = solve_lp(A[row], A_ub=on_face, b_ub=face_rhs, bounds=(None, None), feasibility_tol=1e-9)
        if lowest.optimal and q[row] - lowest.value <= tol * (1.0 + abs(q[row])):
            tight.append(row)
    return tuple(tight)


@pytest.mark.slow
@pytest.mark.parametrize("seed, dim, num_rows", [(0, 2, 5), (1, 3, 6), (2, 3, 8), (3, 4, 9)])
def test_classification_matches_lp_optimal_face(seed, dim, num_rows):
    rng = np.random.default_rng(seed)
    W, q = random_dual_set(rng, dim, num_rows)
    fan = normal_fan(dual_set(W, q))
    # generic directions plus the facet normals, whose optimal faces are facets
    directions = np.vstack([rng.normal(size=(250 - num_rows, dim)), W.T])
    for psi in directions:
        expected = optimal_face_by_lp(W, q, psi)
        index = classify_point(fan, psi)
        if expected is None:
            assert index is None
            assert not fan.coverage.contains(psi[None, :], tol=1e-7).all()
            continue
        assert index is not None
        assert fan.cones[index].face_id == expected
