"""Triangulation of bounded polytopes, and their exact volume and centroid."""
from dataclasses import dataclass
from math import factorial
from typing import List, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull

from two_stage_apm.exceptions import StructuralError, UnboundedPolyhedronError
from two_stage_apm.geometry.polytope import TOL_GEOM, VRep, affine_hull_basis


@dataclass(frozen=True, eq=False)
class Simplex:
    """A simplex given by dim + 1 affinely independent vertices in its ambient space."""

    vertices: np.ndarray

    @property
    def dim(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def volume(self) -> float:
        """The dim-dimensional volume (a 0-simplex has volume 1)."""
        if self.dim == 0:
            return 1.0
        edges = self.vertices[1:] - self.vertices[0]
        if edges.shape[0] == edges.shape[1]:
            return abs(float(np.linalg.det(edges))) / factorial(self.dim)
        gram = edges @ edges.T
        return float(np.sqrt(max(np.linalg.det(gram), 0.0))) / factorial(self.dim)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def triangulate(p: VRep, tol: float = TOL_GEOM) -> List[Simplex]:
    """
    Split a bounded polytope into simplices of its own dimension with disjoint relative interiors.

    The triangulation is a fan from the lexicographically smallest vertex v0 over the facets of the polytope that do
    not contain v0, computed in an orthonormal frame of the affine hull.
    """
    if p.empty:
        raise StructuralError("Cannot triangulate an empty polytope.")
    if not p.bounded:
        raise UnboundedPolyhedronError(f"Cannot triangulate an unbounded polyhedron {p}.")
    points = np.unique(p.vertices, axis=0)
    origin, basis, dim = affine_hull_basis(points, tol=tol)
    if dim == 0:
        return [Simplex(vertices=points[:1])]
    coordinates = (points - origin) @ basis
    if dim == 1:
        order = np.argsort(coordinates[:, 0])
        return [Simplex(vertices=points[[order[0], order[-1]]])]

    apex = int(np.lexsort(points.T[::-1])[0])
    hull = ConvexHull(coordinates)
    scale = max(1.0, float(np.abs(coordinates).max()))
    simplices = []
    for facet, equation in zip(hull.simplices, hull.equations):
        # qhull orients facet normals outward, interior points have negative offset
        if equation[:-1] @ coordinates[apex] + equation[-1] >= -tol * scale:
            continue
        simplices.append(Simplex(vertices=points[np.concatenate([[apex], facet])]))
    assert simplices, f"Every facet of the hull contains the apex {points[apex]}."
    return simplices


def volume_and_centroid(p: VRep, tol: float = TOL_GEOM) -> Tuple[float, Optional[np.ndarray]]:
    """
    Exact volume in the ambient space and centroid of a bounded polytope.

    A lower-dimensional polytope has volume 0 but its centroid under its relative measure is still returned.
    An empty polytope returns (0.0, None).
    """
    if p.empty:
        return 0.0, None
    if not p.bounded:
        raise UnboundedPolyhedronError(f"Cannot compute the volume of an unbounded polyhedron {p}.")
    simplices = triangulate(p, tol=tol)
    volumes = np.array([simplex.volume for simplex in simplices])
    centroids = np.array([simplex.centroid for simplex in simplices])
    total = float(volumes.sum())
    if total > 0.0:
        centroid = volumes @ centroids / total
    else:
        centroid = np.unique(p.vertices, axis=0).mean(axis=0)
    volume = total if simplices[0].dim == p.ambient_dim else 0.0
    return volume, centroid
