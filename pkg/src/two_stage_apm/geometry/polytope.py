"""H- and V-representations of polyhedra and the double description conversions between them."""
from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

import cdd
import numpy as np

from two_stage_apm.exceptions import StructuralError

TOL_GEOM = 1e-9


@dataclass(frozen=True, eq=False)
class HRep:
    """
    Polyhedron { z : A_i z <= b_i for inequality rows, A_j z = b_j for the rows listed in ``eqs`` }.

    Parameters
    ----------
    A : np.ndarray, shape (num_rows, ambient_dim)
        The constraint matrix.
    b : np.ndarray, shape (num_rows,)
        The right-hand side.
    eqs : FrozenSet[int]
        Indices of the rows treated as equalities.
    ambient_dim : int, optional
        The dimension of the ambient space, inferred from ``A`` when omitted.
    """

    A: np.ndarray
    b: np.ndarray
    eqs: FrozenSet[int] = frozenset()
    ambient_dim: Optional[int] = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        ambient_dim = self.ambient_dim
        if A.size == 0:
            if ambient_dim is None:
                ambient_dim = A.shape[1] if A.ndim == 2 else 0
            A = A.reshape(0, ambient_dim)
        if A.ndim != 2:
            raise StructuralError(f"The constraint matrix must be two dimensional, got shape {A.shape}.")
        if ambient_dim is None:
            ambient_dim = A.shape[1]
        if A.shape[1] != ambient_dim:
            raise StructuralError(f"The constraint matrix has {A.shape[1]} columns, expected {ambient_dim}.")
        if A.shape[0] != b.shape[0]:
            raise StructuralError(f"The constraint matrix has {A.shape[0]} rows but b has {b.shape[0]} entries.")
        eqs = frozenset(int(row) for row in self.eqs)
        if any(row < 0 or row >= A.shape[0] for row in eqs):
            raise StructuralError(f"Equality rows {sorted(eqs)} are out of range for {A.shape[0]} rows.")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eqs", eqs)
        object.__setattr__(self, "ambient_dim", int(ambient_dim))

    def __repr__(self):
        return f"HRep(num_rows={self.num_rows}, eqs={sorted(self.eqs)}, ambient_dim={self.ambient_dim})"

    @classmethod
    def full_space(cls, ambient_dim: int) -> "HRep":
        return cls(A=np.zeros((0, ambient_dim)), b=np.zeros(0), ambient_dim=ambient_dim)

    @classmethod
    def from_box(cls, lower: np.ndarray, upper: np.ndarray) -> "HRep":
        """The box { lower <= z <= upper } as 2 * dim inequalities."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        identity = np.eye(lower.shape[0])
        return cls(A=np.vstack([identity, -identity]), b=np.concatenate([upper, -lower]))

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def inequality_rows(self) -> np.ndarray:
        return np.array([row for row in range(self.num_rows) if row not in self.eqs], dtype=int)

    @property
    def equality_rows(self) -> np.ndarray:
        return np.array(sorted(self.eqs), dtype=int)

    def contains(
        self,
        points: np.ndarray,
        tol: float = TOL_GEOM,
        strict_rows: Iterable[int] = (),
    ) -> np.ndarray:
        """
        Membership of each point, up to ``tol`` scaled by the row norms.

        Rows in ``strict_rows`` are tested as strict inequalities: a point within ``tol`` of such a row is outside.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.ambient_dim:
            raise StructuralError(f"Points have dimension {points.shape[1]}, expected {self.ambient_dim}.")
        inside = np.ones(points.shape[0], dtype=bool)
        if self.num_rows == 0:
            return inside
        residual = points @ self.A.T - self.b
        slack = tol * np.maximum(1.0, np.linalg.norm(self.A, axis=1))
        strict_rows = frozenset(strict_rows)
        for row in range(self.num_rows):
            if row in self.eqs:
                inside &= np.abs(residual[:, row]) <= slack[row]
            elif row in strict_rows:
                inside &= residual[:, row] < -slack[row]
            else:
                inside &= residual[:, row] <= slack[row]
        return inside

    def normalized(self) -> "HRep":
        """Scale every nonzero row to unit norm, keeping row order."""
        norms = np.linalg.norm(self.A, axis=1)
        norms[norms == 0.0] = 1.0
        return HRep(A=self.A / norms[:, None], b=self.b / norms, eqs=self.eqs, ambient_dim=self.ambient_dim)


@dataclass(frozen=True, eq=False)
class VRep:
    """
    Polyhedron Conv(vertices) + Cone(rays) + Span(lineality).

    An empty polyhedron has no vertices; ``empty`` is the emptiness flag.
    """

    vertices: np.ndarray
    rays: np.ndarray
    lineality: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        arrays = dict()
        for name in ("vertices", "rays", "lineality"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.size == 0:
                value = value.reshape(0, self.ambient_dim)
            if value.ndim != 2 or value.shape[1] != self.ambient_dim:
                raise StructuralError(f"'{name}' must have shape (k, {self.ambient_dim}), got {value.shape}.")
            arrays[name] = value
        for name, value in arrays.items():
            object.__setattr__(self, name, value)
        if self.vertices.shape[0] == 0 and (self.rays.shape[0] > 0 or self.lineality.shape[0] > 0):
            raise StructuralError("A nonempty V-representation needs at least one vertex.")

    def __repr__(self):
        return (
            f"VRep(num_vertices={self.vertices.shape[0]}, num_rays={self.rays.shape[0]}, "
            f"num_lineality={self.lineality.shape[0]}, ambient_dim={self.ambient_dim})"
        )

    @classmethod
    def from_points(cls, vertices, rays=None, lineality=None) -> "VRep":
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        ambient_dim = vertices.shape[1]
        rays = np.zeros((0, ambient_dim)) if rays is None else np.asarray(rays, dtype=float)
        lineality = np.zeros((0, ambient_dim)) if lineality is None else np.asarray(lineality, dtype=float)
        return cls(vertices=vertices, rays=rays, lineality=lineality, ambient_dim=ambient_dim)

    @classmethod
    def empty_set(cls, ambient_dim: int) -> "VRep":
        zeros = np.zeros((0, ambient_dim))
        return cls(vertices=zeros, rays=zeros, lineality=zeros, ambient_dim=ambient_dim)

    @property
    def empty(self) -> bool:
        return self.vertices.shape[0] == 0

    @property
    def bounded(self) -> bool:
        return self.rays.shape[0] == 0 and self.lineality.shape[0] == 0


def _snap(values: np.ndarray) -> np.ndarray:
    """Round away the float noise cdd leaves on entries that should be zero."""
    scale = max(1.0, float(np.abs(values).max())) if values.size else 1.0
    values = values.copy()
    values[np.abs(values) < 1e-13 * scale] = 0.0
    return values


def _hrep_to_cdd(h: HRep) -> "cdd.Matrix":
    # cdd stores A z <= b as rows [b, -A]
    inequality_rows = h.inequality_rows
    rows = np.hstack([h.b[inequality_rows, None], -h.A[inequality_rows]])
    if rows.shape[0] == 0:
        # 1 >= 0 keeps the matrix non-empty without constraining anything
        rows = np.zeros((1, h.ambient_dim + 1))
        rows[0, 0] = 1.0
    matrix = cdd.Matrix(rows.tolist(), number_type="float")
    equality_rows = h.equality_rows
    if equality_rows.size:
        matrix.extend(np.hstack([h.b[equality_rows, None], -h.A[equality_rows]]).tolist(), linear=True)
    matrix.rep_type = cdd.RepType.INEQUALITY
    return matrix


def _cdd_to_hrep(matrix: "cdd.Matrix", ambient_dim: int) -> HRep:
    if matrix.row_size == 0:
        return HRep.full_space(ambient_dim)
    rows = _snap(np.array([matrix[i] for i in range(matrix.row_size)], dtype=float))
    b = rows[:, 0]
    A = -rows[:, 1:]
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0.0
    if np.any((~keep) & (b < 0.0)):
        # 0 <= b with b < 0: the set is empty, keep one contradictory row to say so
        return HRep(A=np.zeros((1, ambient_dim)), b=np.array([-1.0]), ambient_dim=ambient_dim)
    old_to_new = np.cumsum(keep) - 1
    eqs = frozenset(int(old_to_new[row]) for row in matrix.lin_set if keep[row])
    A = A[keep] / norms[keep, None]
    b = b[keep] / norms[keep]
    return HRep(A=A, b=b, eqs=eqs, ambient_dim=ambient_dim)


def _vrep_to_cdd(v: VRep) -> "cdd.Matrix":
    rows = [np.concatenate([[1.0], vertex]) for vertex in v.vertices]
    rows += [np.concatenate([[0.0], ray]) for ray in v.rays]
    matrix = cdd.Matrix(np.array(rows).tolist(), number_type="float")
    if v.lineality.shape[0]:
        lineality_rows = np.hstack([np.zeros((v.lineality.shape[0], 1)), v.lineality])
        matrix.extend(lineality_rows.tolist(), linear=True)
    matrix.rep_type = cdd.RepType.GENERATOR
    return matrix


def _unit_rows(values: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(values, axis=1)
    keep = norms > 0.0
    return values[keep] / norms[keep, None]


def h_to_v(h: HRep) -> VRep:
    """
    Double description of an H-representation.

    The result is minimal: redundant generators are removed, rays and lineality directions have unit norm.
    An empty polyhedron yields ``VRep.empty_set``.
    """
    polyhedron = cdd.Polyhedron(_hrep_to_cdd(h))
    generators = polyhedron.get_generators()
    if generators.row_size == 0:
        return VRep.empty_set(h.ambient_dim)
    generators.canonicalize()
    rows = _snap(np.array([generators[i] for i in range(generators.row_size)], dtype=float))
    linear = np.zeros(rows.shape[0], dtype=bool)
    linear[list(generators.lin_set)] = True
    is_vertex = (~linear) & np.isclose(rows[:, 0], 1.0)
    is_ray = (~linear) & ~is_vertex
    vertices = rows[is_vertex, 1:]
    if not is_vertex.any():
        # cdd leaves the apex of a cone implicit
        if not (is_ray.any() or linear.any()):
            return VRep.empty_set(h.ambient_dim)
        vertices = np.zeros((1, h.ambient_dim))
    return VRep(
        vertices=vertices,
        rays=_unit_rows(rows[is_ray, 1:]),
        lineality=_unit_rows(rows[linear, 1:]),
        ambient_dim=h.ambient_dim,
    )


def v_to_h(v: VRep) -> HRep:
    """
    Irredundant H-representation of a nonempty V-representation.

    Every inequality row supports a facet and has unit norm; implicit equalities are moved to ``eqs``.
    """
    if v.empty:
        raise StructuralError("Cannot convert an empty V-representation.")
    inequalities = cdd.Polyhedron(_vrep_to_cdd(v)).get_inequalities()
    if inequalities.row_size > 0:
        inequalities.canonicalize()
    return _cdd_to_hrep(inequalities, v.ambient_dim)


def canonical_hrep(h: HRep) -> HRep:
    """Remove redundant rows and detect implicit equalities."""
    matrix = _hrep_to_cdd(h)
    matrix.canonicalize()
    return _cdd_to_hrep(matrix, h.ambient_dim)


def intersect(p: HRep, q: HRep, remove_redundancy: bool = False) -> HRep:
    """Intersection of two polyhedra by stacking their constraints."""
    if p.ambient_dim != q.ambient_dim:
        raise StructuralError(f"Cannot intersect polyhedra of dimensions {p.ambient_dim} and {q.ambient_dim}.")
    eqs = set(p.eqs) | {row + p.num_rows for row in q.eqs}
    result = HRep(A=np.vstack([p.A, q.A]), b=np.concatenate([p.b, q.b]), eqs=frozenset(eqs), ambient_dim=p.ambient_dim)
    if remove_redundancy and result.num_rows > 0:
        return canonical_hrep(result)
    return result


def is_empty(h: HRep) -> bool:
    return h_to_v(h).empty


def affine_hull_basis(points: np.ndarray, tol: float = TOL_GEOM) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Orthonormal description of the affine hull of a point set.

    Returns
    -------
    origin : np.ndarray
        A point of the hull (the first point).
    basis : np.ndarray, shape (ambient_dim, dim)
        Orthonormal columns spanning the direction space.
    dim : int
        The affine dimension.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    origin = points[0]
    differences = points[1:] - origin
    if differences.shape[0] == 0:
        return origin, np.zeros((points.shape[1], 0)), 0
    _, singular_values, right = np.linalg.svd(differences, full_matrices=False)
    scale = max(1.0, float(singular_values[0])) if singular_values.size else 1.0
    dim = int(np.sum(singular_values > tol * scale))
    return origin, right[:dim].T, dim
