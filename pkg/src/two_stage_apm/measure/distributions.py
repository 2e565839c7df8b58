"""Laws of the random data xi = (T, h) and their conditional moments over polyhedral cells."""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from two_stage_apm.exceptions import StructuralError
from two_stage_apm.geometry import TOL_GEOM, HRep, h_to_v, intersect, volume_and_centroid

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CellStats:
    """Probability of a cell and the conditional means of T and h on it (undefined when prob = 0)."""

    prob: float
    mean_T: Optional[np.ndarray]
    mean_h: Optional[np.ndarray]

    @classmethod
    def null(cls) -> "CellStats":
        return cls(prob=0.0, mean_T=None, mean_h=None)

    @property
    def defined(self) -> bool:
        return self.prob > 0.0 and self.mean_T is not None

    def __repr__(self):
        return f"CellStats(prob={self.prob:.6g}, defined={self.defined})"


class XiDistribution(ABC):
    """
    Base class for the law of xi = (T, h), with T of shape (num_rows, num_cols) and h of length num_rows.

    xi is identified with the flat vector (vec(T), h) where vec is row-major. Coordinates that are constant under the
    law are excluded from the "random coordinates"; every cell is an HRep over the random coordinates only.
    """

    def __init__(self, num_rows: int, num_cols: int):
        self.num_rows = int(num_rows)
        self.num_cols = int(num_cols)

    @property
    def flat_dim(self) -> int:
        return self.num_rows * self.num_cols + self.num_rows

    @property
    @abstractmethod
    def random_mask(self) -> np.ndarray:
        """Boolean mask over the flat coordinates that are random."""

    @property
    def random_index(self) -> np.ndarray:
        return np.flatnonzero(self.random_mask)

    @property
    def num_random(self) -> int:
        return int(self.random_mask.sum())

    @property
    def fixed_technology(self) -> bool:
        return not self.random_mask[: self.num_rows * self.num_cols].any()

    @property
    def fixed_values(self) -> np.ndarray:
        """The flat mean; its constant coordinates are the values substituted into every cell."""
        return self.flatten(*self.total_mean())

    def flatten(self, T: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Flatten one (T, h) pair, or a batch of pairs with leading dimension K, to (vec(T), h)."""
        T = np.asarray(T, dtype=float)
        h = np.asarray(h, dtype=float)
        if T.ndim == 3:
            return np.hstack([T.reshape(T.shape[0], -1), h])
        return np.concatenate([T.reshape(-1), h])

    def unflatten(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        xi = np.asarray(xi, dtype=float)
        split = self.num_rows * self.num_cols
        if xi.ndim == 2:
            return xi[:, :split].reshape(-1, self.num_rows, self.num_cols), xi[:, split:]
        return xi[:split].reshape(self.num_rows, self.num_cols), xi[split:]

    def random_coordinates(self, xi: np.ndarray) -> np.ndarray:
        return np.asarray(xi, dtype=float)[..., self.random_mask]

    def embed(self, z: np.ndarray) -> np.ndarray:
        """Complete random coordinates z (one point or a batch) with the constant coordinates."""
        z = np.asarray(z, dtype=float)
        xi = np.tile(self.fixed_values, z.shape[:-1] + (1,))
        xi[..., self.random_mask] = z
        return xi

    def _check_cell(self, cell: Optional[HRep]):
        if cell is not None and cell.ambient_dim != self.num_random:
            raise StructuralError(
                f"The cell lives in dimension {cell.ambient_dim} but the law has {self.num_random} random coordinates."
            )

    @abstractmethod
    def total_mean(self) -> Tuple[np.ndarray, np.ndarray]:
        """E[T] and E[h]."""

    @abstractmethod
    def cell_stats(
        self,
        cell: Optional[HRep] = None,
        strict_rows: Iterable[int] = (),
        members: Optional[FrozenSet[int]] = None,
        tol: float = TOL_GEOM,
    ) -> CellStats:
        """Probability and conditional means over a cell given over the random coordinates (None is the whole space)."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> "DiscreteAtoms":
        """i.i.d. draws as an equally weighted DiscreteAtoms law."""


class DiscreteAtoms(XiDistribution):
    """
    A finitely supported law: atom k is (T[k], h[k]) with probability weights[k].

    Parameters
    ----------
    T : np.ndarray, shape (num_atoms, num_rows, num_cols)
    h : np.ndarray, shape (num_atoms, num_rows)
    weights : np.ndarray, shape (num_atoms,)
        Nonnegative and summing to one.
    """

    def __init__(self, T: np.ndarray, h: np.ndarray, weights: np.ndarray):
        T = np.asarray(T, dtype=float)
        h = np.asarray(h, dtype=float)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if T.ndim != 3:
            raise StructuralError(f"T must have shape (num_atoms, num_rows, num_cols), got {T.shape}.")
        num_atoms, num_rows, num_cols = T.shape
        if h.shape != (num_atoms, num_rows):
            raise StructuralError(f"h must have shape {(num_atoms, num_rows)}, got {h.shape}.")
        if weights.shape != (num_atoms,):
            raise StructuralError(f"Expected {num_atoms} weights, got {weights.shape[0]}.")
        if np.any(weights < 0.0):
            raise StructuralError("Atom weights must be nonnegative.")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL * max(1, num_atoms):
            raise StructuralError(f"Atom weights must sum to 1, got {weights.sum()!r}.")
        super().__init__(num_rows=num_rows, num_cols=num_cols)
        self.T = T
        self.h = h
        self.weights = weights
        flat = self.flatten(T, h)
        self._random_mask = np.ptp(flat, axis=0) > 0.0
        self.points = flat[:, self._random_mask]

    @classmethod
    def single(cls, T: np.ndarray, h: np.ndarray) -> "DiscreteAtoms":
        """The deterministic law concentrated on (T, h)."""
        return cls(T=np.asarray(T, dtype=float)[None], h=np.asarray(h, dtype=float)[None], weights=np.ones(1))

    def __repr__(self):
        return f"DiscreteAtoms(num_atoms={self.num_atoms}, num_rows={self.num_rows}, num_cols={self.num_cols})"

    @property
    def num_atoms(self) -> int:
        return self.weights.shape[0]

    @property
    def random_mask(self) -> np.ndarray:
        return self._random_mask

    def total_mean(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.tensordot(self.weights, self.T, axes=1), self.weights @ self.h

    def atoms_in(self, cell: HRep, strict_rows: Iterable[int] = (), tol: float = TOL_GEOM) -> np.ndarray:
        self._check_cell(cell)
        return cell.contains(self.points, tol=tol, strict_rows=strict_rows)

    def stats_of(self, mask: np.ndarray) -> CellStats:
        weights = self.weights * mask
        prob = float(weights.sum())
        if prob <= 0.0:
            return CellStats.null()
        return CellStats(
            prob=min(prob, 1.0),
            mean_T=np.tensordot(weights, self.T, axes=1) / prob,
            mean_h=weights @ self.h / prob,
        )

    def cell_stats(
        self,
        cell: Optional[HRep] = None,
        strict_rows: Iterable[int] = (),
        members: Optional[FrozenSet[int]] = None,
        tol: float = TOL_GEOM,
    ) -> CellStats:
        """
        Atoms of the cell are given by ``members`` when known, otherwise by membership in ``cell`` with the rows in
        ``strict_rows`` tested strictly.
        """
        if members is not None:
            mask = np.zeros(self.num_atoms, dtype=bool)
            mask[sorted(members)] = True
        elif cell is None:
            mask = np.ones(self.num_atoms, dtype=bool)
        else:
            mask = self.atoms_in(cell, strict_rows=strict_rows, tol=tol)
        return self.stats_of(mask)

    def sample(self, rng: np.random.Generator, size: int) -> "DiscreteAtoms":
        chosen = rng.choice(self.num_atoms, size=size, p=self.weights)
        return DiscreteAtoms(T=self.T[chosen], h=self.h[chosen], weights=np.full(size, 1.0 / size))


@lru_cache(maxsize=100_000)
def _unit_cube_moments(dim: int, rows: Tuple[Tuple[float, ...], ...]) -> Tuple[float, Optional[Tuple[float, ...]]]:
    """Volume and centroid of {u in [0, 1]^dim : a u <= b for each row (a, b)}."""
    matrix = np.array(rows, dtype=float)
    A, b = matrix[:, :-1], matrix[:, -1]
    if dim == 1:
        lower, upper = 0.0, 1.0
        for a, beta in zip(A[:, 0], b):
            if a > 0.0:
                upper = min(upper, beta / a)
            else:
                lower = max(lower, beta / a)
        if upper <= lower:
            return 0.0, None
        return upper - lower, (0.5 * (lower + upper),)
    cube = HRep.from_box(np.zeros(dim), np.ones(dim))
    polytope = h_to_v(intersect(HRep(A=A, b=b), cube))
    volume, centroid = volume_and_centroid(polytope)
    if volume <= 0.0:
        # empty, or thinner than the geometric tolerance
        logger.debug(f"Cell block {rows} has no {dim}-dimensional volume, its mass is dropped.")
        return 0.0, None
    return volume, tuple(float(value) for value in centroid)


class UniformBox(XiDistribution):
    """
    Independent entrywise uniform law: each entry of T and h is uniform on [low, high], constant when low = high.

    Conditional moments are exact: a cell is intersected with the support box in unit-cube coordinates, its rows split
    the random coordinates into independent groups, and each group polytope is triangulated once (results are cached
    by the group's constraint rows).
    """

    def __init__(self, T_low: np.ndarray, T_high: np.ndarray, h_low: np.ndarray, h_high: np.ndarray):
        T_low = np.atleast_2d(np.asarray(T_low, dtype=float))
        T_high = np.atleast_2d(np.asarray(T_high, dtype=float))
        h_low = np.asarray(h_low, dtype=float).reshape(-1)
        h_high = np.asarray(h_high, dtype=float).reshape(-1)
        if T_low.shape != T_high.shape or h_low.shape != h_high.shape:
            raise StructuralError("Lower and upper bounds must have matching shapes.")
        if T_low.shape[0] != h_low.shape[0]:
            raise StructuralError(f"T has {T_low.shape[0]} rows but h has {h_low.shape[0]} entries.")
        super().__init__(num_rows=T_low.shape[0], num_cols=T_low.shape[1])
        self.lower = self.flatten(T_low, h_low)
        self.upper = self.flatten(T_high, h_high)
        if np.any(self.lower > self.upper):
            raise StructuralError("Every uniform interval must satisfy low <= high.")
        self._random_mask = self.upper > self.lower
        self._low = self.lower[self._random_mask]
        self._width = self.upper[self._random_mask] - self._low

    @classmethod
    def fixed_technology_law(cls, T: np.ndarray, h_low: np.ndarray, h_high: np.ndarray) -> "UniformBox":
        return cls(T_low=T, T_high=T, h_low=h_low, h_high=h_high)

    def __repr__(self):
        return f"UniformBox(num_random={self.num_random}, num_rows={self.num_rows}, num_cols={self.num_cols})"

    @property
    def random_mask(self) -> np.ndarray:
        return self._random_mask

    def support(self) -> HRep:
        """The support box over the random coordinates."""
        return HRep.from_box(self._low, self._low + self._width)

    def total_mean(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.unflatten(0.5 * (self.lower + self.upper))

    def _stats_from_unit_mean(self, prob: float, unit_mean: np.ndarray) -> CellStats:
        flat = self.fixed_values
        flat[self._random_mask] = self._low + self._width * unit_mean
        mean_T, mean_h = self.unflatten(flat)
        return CellStats(prob=min(prob, 1.0), mean_T=mean_T, mean_h=mean_h)

    def cell_stats(
        self,
        cell: Optional[HRep] = None,
        strict_rows: Iterable[int] = (),
        members: Optional[FrozenSet[int]] = None,
        tol: float = TOL_GEOM,
    ) -> CellStats:
        """Strict rows are irrelevant here: cell boundaries have probability zero."""
        self._check_cell(cell)
        unit_mean = np.full(self.num_random, 0.5)
        if cell is None or cell.num_rows == 0:
            return self._stats_from_unit_mean(1.0, unit_mean)

        A = cell.A * self._width
        b = cell.b - cell.A @ self._low
        norms = np.linalg.norm(A, axis=1)
        constant = norms <= tol * np.maximum(1.0, np.linalg.norm(cell.A, axis=1))
        for row in np.flatnonzero(constant):
            violated = abs(b[row]) > tol if row in cell.eqs else b[row] < -tol
            if violated:
                return CellStats.null()
        if any(row in cell.eqs for row in np.flatnonzero(~constant)):
            # a nontrivial equality has Lebesgue measure zero
            return CellStats.null()
        A = A[~constant] / norms[~constant, None]
        b = b[~constant] / norms[~constant]
        if A.shape[0] == 0:
            return self._stats_from_unit_mean(1.0, unit_mean)

        support = np.abs(A) > 0.0
        adjacency = csr_matrix(support.T.astype(int) @ support.astype(int))
        num_groups, labels = connected_components(adjacency, directed=False)
        prob = 1.0
        for group in range(num_groups):
            coordinates = np.flatnonzero(labels == group)
            rows = np.flatnonzero(support[:, coordinates].any(axis=1))
            if rows.size == 0:
                continue
            block = np.hstack([A[np.ix_(rows, coordinates)], b[rows, None]])
            key = tuple(sorted(tuple(float(value) for value in row) for row in block))
            volume, centroid = _unit_cube_moments(coordinates.size, key)
            if volume <= 0.0:
                return CellStats.null()
            prob *= volume
            unit_mean[coordinates] = centroid
        return self._stats_from_unit_mean(prob, unit_mean)

    def sample(self, rng: np.random.Generator, size: int) -> DiscreteAtoms:
        flat = self.lower + (self.upper - self.lower) * rng.random((size, self.flat_dim))
        T, h = self.unflatten(flat)
        return DiscreteAtoms(T=T, h=h, weights=np.full(size, 1.0 / size))

    def discretize(self, points_per_axis: int) -> DiscreteAtoms:
        """Equally weighted midpoint grid over the support, for comparisons with the continuous law."""
        midpoints = (np.arange(points_per_axis) + 0.5) / points_per_axis
        grid = np.stack(np.meshgrid(*([midpoints] * self.num_random), indexing="ij"), axis=-1)
        grid = grid.reshape(-1, self.num_random)
        T, h = self.unflatten(self.embed(self._low + self._width * grid))
        return DiscreteAtoms(T=T, h=h, weights=np.full(grid.shape[0], 1.0 / grid.shape[0]))


def cell_stats(
    dist: XiDistribution,
    cell: Optional[HRep] = None,
    strict_rows: Iterable[int] = (),
    members: Optional[FrozenSet[int]] = None,
    tol: float = TOL_GEOM,
) -> CellStats:
    return dist.cell_stats(cell, strict_rows=strict_rows, members=members, tol=tol)


def total_mean(dist: XiDistribution) -> Tuple[np.ndarray, np.ndarray]:
    return dist.total_mean()


def sample(dist: XiDistribution, rng: np.random.Generator, size: int) -> DiscreteAtoms:
    return dist.sample(rng, size)
