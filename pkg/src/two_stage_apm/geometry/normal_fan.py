"""Normal fan of the dual polyhedron D = {lambda : W^T lambda <= q} and classification of directions psi."""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np

from two_stage_apm.exceptions import DualInfeasibleError, NumericalDegeneracyError
from two_stage_apm.geometry.polytope import TOL_GEOM, HRep, VRep, h_to_v, v_to_h

logger = logging.getLogger(__name__)

FaceId = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Cone:
    """
    The normal cone of a face F of D, generated by the constraint rows of D that are tight on F.

    ``face_id`` is the sorted tuple of those tight rows; ``dim`` is the dimension of the cone and ``face_dim`` the
    dimension of F.
    """

    generators: VRep
    dim: int
    face_id: FaceId
    face_dim: int

    @cached_property
    def hrep(self) -> HRep:
        """Irredundant homogeneous H-representation, computed on first use."""
        h = v_to_h(self.generators)
        return HRep(A=h.A, b=np.zeros(h.num_rows), eqs=h.eqs, ambient_dim=h.ambient_dim)

    @property
    def ambient_dim(self) -> int:
        return self.generators.ambient_dim

    def __repr__(self):
        return f"Cone(face_id={self.face_id}, dim={self.dim}, face_dim={self.face_dim})"


@dataclass(frozen=True, eq=False)
class Fan:
    """
    All normal cones of the nonempty faces of D.

    Parameters
    ----------
    cones : tuple of Cone
        One cone per face, ordered by decreasing cone dimension then by face_id.
    maximal : FrozenSet[int]
        Indices of the cones of largest dimension (those normal to the minimal faces of D).
    coverage : HRep
        The polar of the recession cone of D: the directions where the support function of D is finite.
    dual : HRep
        D itself.
    dual_vrep : VRep
        D's V-representation; its vertices stand for the minimal faces.
    vertex_incidence, ray_incidence : np.ndarray of bool
        Tight constraint rows at each vertex and along each ray of D.
    """

    cones: Tuple[Cone, ...]
    maximal: FrozenSet[int]
    coverage: HRep
    dual: HRep
    dual_vrep: VRep
    vertex_incidence: np.ndarray
    ray_incidence: np.ndarray
    index: Dict[FaceId, int]

    def __len__(self):
        return len(self.cones)

    def __repr__(self):
        return f"Fan(num_cones={len(self.cones)}, num_maximal={len(self.maximal)}, ambient_dim={self.ambient_dim})"

    @property
    def ambient_dim(self) -> int:
        return self.dual.ambient_dim

    def cone_of(self, face_id: FaceId) -> Cone:
        return self.cones[self.index[tuple(face_id)]]


def _tight_rows(d: HRep, points: np.ndarray, homogeneous: bool, tol: float) -> np.ndarray:
    """Boolean (num_points, num_rows) matrix of the rows of d that are tight at each point (or along each ray)."""
    if points.shape[0] == 0:
        return np.zeros((0, d.num_rows), dtype=bool)
    values = points @ d.A.T
    row_norms = np.linalg.norm(d.A, axis=1)
    point_norms = np.linalg.norm(points, axis=1)
    if homogeneous:
        return np.abs(values) <= tol * np.outer(point_norms, row_norms)
    scale = 1.0 + np.abs(d.b)[None, :] + np.outer(point_norms, row_norms)
    return np.abs(values - d.b[None, :]) <= tol * scale


def _rank(vectors: np.ndarray, tol: float) -> int:
    if vectors.shape[0] == 0:
        return 0
    singular_values = np.linalg.svd(vectors, compute_uv=False)
    return int(np.sum(singular_values > tol * max(1.0, float(singular_values[0]))))


def normal_fan(d: HRep, tol: float = TOL_GEOM) -> Fan:
    """
    Enumerate the faces of D and build their normal cones.

    Faces are enumerated as closed sets of tight rows, starting from D itself and adding one row at a time; the
    closure of a row set is the set of rows tight on every vertex and ray of D that satisfies it.

    Raises
    ------
    DualInfeasibleError
        When D is empty.
    """
    dual_vrep = h_to_v(d)
    if dual_vrep.empty:
        raise DualInfeasibleError()
    num_rows = d.num_rows
    vertex_incidence = _tight_rows(d, dual_vrep.vertices, homogeneous=False, tol=tol)
    ray_incidence = _tight_rows(d, dual_vrep.rays, homogeneous=True, tol=tol)
    for row in d.eqs:
        vertex_incidence[:, row] = True
        ray_incidence[:, row] = True

    def closure(rows: np.ndarray) -> Optional[np.ndarray]:
        vertices = np.all(vertex_incidence[:, rows], axis=1)
        if not vertices.any():
            return None
        rays = np.all(ray_incidence[:, rows], axis=1)
        signature = np.all(vertex_incidence[vertices], axis=0)
        if rays.any():
            signature &= np.all(ray_incidence[rays], axis=0)
        return signature

    top = closure(np.zeros(num_rows, dtype=bool))
    faces: Dict[FaceId, np.ndarray] = {tuple(np.flatnonzero(top)): top}
    queue = [top]
    while queue:
        signature = queue.pop()
        for row in np.flatnonzero(~signature):
            rows = signature.copy()
            rows[row] = True
            child = closure(rows)
            if child is None:
                continue
            key = tuple(int(i) for i in np.flatnonzero(child))
            if key not in faces:
                faces[key] = child
                queue.append(child)

    lineality = d.A[sorted(d.eqs)]
    cones = []
    for face_id, signature in faces.items():
        rays = d.A[[row for row in face_id if row not in d.eqs]]
        generators = VRep(
            vertices=np.zeros((1, d.ambient_dim)), rays=rays, lineality=lineality, ambient_dim=d.ambient_dim
        )
        face_vertices = dual_vrep.vertices[np.all(vertex_incidence[:, signature], axis=1)]
        face_rays = dual_vrep.rays[np.all(ray_incidence[:, signature], axis=1)]
        directions = np.vstack([face_vertices[1:] - face_vertices[0], face_rays, dual_vrep.lineality])
        cones.append(
            Cone(
                generators=generators,
                dim=_rank(np.vstack([rays, lineality]), tol),
                face_id=face_id,
                face_dim=_rank(directions, tol),
            )
        )
    cones.sort(key=lambda cone: (-cone.dim, len(cone.face_id), cone.face_id))
    max_dim = cones[0].dim
    maximal = frozenset(i for i, cone in enumerate(cones) if cone.dim == max_dim)

    if dual_vrep.bounded:
        coverage = HRep.full_space(d.ambient_dim)
    else:
        all_rows = d.A[[row for row in range(num_rows) if row not in d.eqs]]
        polar = VRep(
            vertices=np.zeros((1, d.ambient_dim)), rays=all_rows, lineality=lineality, ambient_dim=d.ambient_dim
        )
        coverage = v_to_h(polar)
        coverage = HRep(A=coverage.A, b=np.zeros(coverage.num_rows), eqs=coverage.eqs, ambient_dim=d.ambient_dim)

    logger.debug(f"Normal fan with {len(cones)} cones ({len(maximal)} maximal) in dimension {d.ambient_dim}.")
    return Fan(
        cones=tuple(cones),
        maximal=maximal,
        coverage=coverage,
        dual=d,
        dual_vrep=dual_vrep,
        vertex_incidence=vertex_incidence,
        ray_incidence=ray_incidence,
        index={cone.face_id: i for i, cone in enumerate(cones)},
    )


def _support(fan: Fan, psi: np.ndarray, tol: float) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Vertices and rays of D in the optimal face of max psi^T lambda, or None when the maximum is infinite."""
    dual_vrep = fan.dual_vrep
    psi_norm = float(np.linalg.norm(psi))
    if dual_vrep.lineality.shape[0] and np.any(np.abs(dual_vrep.lineality @ psi) > tol * max(1.0, psi_norm)):
        return None
    ray_values = dual_vrep.rays @ psi
    if np.any(ray_values > tol * max(1.0, psi_norm)):
        return None
    values = dual_vrep.vertices @ psi
    scale = max(1.0, psi_norm * float(np.linalg.norm(dual_vrep.vertices, axis=1).max()))
    optimal_vertices = values >= values.max() - tol * scale
    optimal_rays = np.abs(ray_values) <= tol * max(1.0, psi_norm)
    return optimal_vertices, optimal_rays


def optimal_vertex_mask(fan: Fan, psi: np.ndarray, tol: float = TOL_GEOM) -> Optional[np.ndarray]:
    """
    Mask over the vertices of D attaining max psi^T lambda (within tol), or None outside the fan coverage.

    psi lies in the closed normal cone of a minimal face exactly when that face's vertex is in the mask.
    """
    support = _support(fan, np.asarray(psi, dtype=float), tol)
    return None if support is None else support[0]


def classify_point(fan: Fan, psi: np.ndarray, tol: float = TOL_GEOM) -> Optional[int]:
    """
    Index of the cone whose relative interior contains psi, or None when psi is outside the fan coverage.

    The cone is the normal cone of the optimal face of max psi^T lambda over D, identified by the rows tight on
    every optimal vertex and ray.

    Raises
    ------
    NumericalDegeneracyError
        When the near-optimal vertices within tol do not form a face of D.
    """
    psi = np.asarray(psi, dtype=float)
    support = _support(fan, psi, tol)
    if support is None:
        return None
    optimal_vertices, optimal_rays = support
    signature = np.all(fan.vertex_incidence[optimal_vertices], axis=0)
    if optimal_rays.any():
        signature &= np.all(fan.ray_incidence[optimal_rays], axis=0)
    face_id = tuple(int(i) for i in np.flatnonzero(signature))
    index = fan.index.get(face_id)
    face_vertices = np.all(fan.vertex_incidence[:, signature], axis=1)
    if index is None or np.any(face_vertices != optimal_vertices):
        best = int(np.argmax(fan.dual_vrep.vertices @ psi))
        best_face = tuple(int(i) for i in np.flatnonzero(fan.vertex_incidence[best]))
        raise NumericalDegeneracyError(
            f"Direction {psi} is ambiguous between faces {face_id} and {best_face}.",
            candidates=(face_id, best_face),
        )
    return index
