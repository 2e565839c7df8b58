from .polytope import TOL_GEOM, HRep, VRep, affine_hull_basis, canonical_hrep, h_to_v, intersect, is_empty, v_to_h
from .normal_fan import Cone, Fan, classify_point, normal_fan, optimal_vertex_mask
from .triangulation import Simplex, triangulate, volume_and_centroid
