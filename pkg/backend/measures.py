"""
Finite W-valued measures made of point atoms and lattice cells, their Riesz
potentials and fractional maximal functions.

A cell stores its full mass (density value times h^n) at the cell center.
|.| of a weight is the Euclidean norm.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from config import parallel_map
from errors import DimensionMismatchError, InputInvariantError
from grid_function import GridFunction
from models import AtomModel, MeasureFile, PotentialModel
from regions import Region

logger = logging.getLogger(__name__)

CUBE_QUADRATURE_POINTS = 24
MAXIMAL_LADDER_RUNGS = 16


@dataclass(frozen=True)
class Potential:
    value: Optional[float]
    infinite: bool = False

    @classmethod
    def inf(cls) -> "Potential":
        return cls(value=None, infinite=True)

    def to_model(self) -> PotentialModel:
        return PotentialModel(value=self.value, infinite=self.infinite)

    def as_float(self) -> float:
        return float("inf") if self.infinite else float(self.value)


class DiscreteMeasure:
    """Atoms (x_a, w_a) plus lattice cells (c_i, m_i) of side h"""

    def __init__(self, n: int, dim: int,
                 atom_points: Optional[np.ndarray] = None, atom_weights: Optional[np.ndarray] = None,
                 cell_points: Optional[np.ndarray] = None, cell_weights: Optional[np.ndarray] = None,
                 h: Optional[float] = None):
        self.n = int(n)
        self.dim = int(dim)
        self.atom_points = self._array(atom_points, self.n)
        self.atom_weights = self._array(atom_weights, self.dim)
        self.cell_points = self._array(cell_points, self.n)
        self.cell_weights = self._array(cell_weights, self.dim)
        if len(self.atom_points) != len(self.atom_weights) or len(self.cell_points) != len(self.cell_weights):
            raise DimensionMismatchError("every atom and cell needs exactly one weight")
        if len(self.cell_points) and not (h and h > 0):
            raise InputInvariantError("a measure with cells needs a positive cell size h")
        for arr in (self.atom_points, self.atom_weights, self.cell_points, self.cell_weights):
            if not np.all(np.isfinite(arr)):
                raise InputInvariantError("measure points and weights must be finite")
            arr.setflags(write=False)
        self.h = float(h) if h else None

    @staticmethod
    def _array(values, width: int) -> np.ndarray:
        if values is None:
            return np.zeros((0, width))
        arr = np.array(values, dtype=float).reshape(-1, width)
        return arr

    @classmethod
    def from_atoms(cls, points: Sequence[Sequence[float]], weights: Sequence[Sequence[float]]) -> "DiscreteMeasure":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        weights = np.asarray(weights, dtype=float)
        weights = weights.reshape(len(points), -1)
        return cls(points.shape[1], weights.shape[1], points, weights)

    @classmethod
    def from_density(cls, density: GridFunction) -> "DiscreteMeasure":
        """Cells of a grid density; zero cells are dropped"""
        weights = density.flat_values() * density.cell_volume
        keep = np.any(weights != 0, axis=1)
        flat = np.flatnonzero(keep)
        multi = np.stack(np.unravel_index(flat, density.shape), axis=1)
        return cls(density.n, density.dim, cell_points=density.coordinates(multi),
                   cell_weights=weights[keep], h=density.h)

    @classmethod
    def zero(cls, n: int, dim: int) -> "DiscreteMeasure":
        return cls(n, dim)

    def _with(self, atom_mask=None, cell_mask=None, points_scale=1.0, weight_scale=1.0) -> "DiscreteMeasure":
        ap = self.atom_points if atom_mask is None else self.atom_points[atom_mask]
        aw = self.atom_weights if atom_mask is None else self.atom_weights[atom_mask]
        cp = self.cell_points if cell_mask is None else self.cell_points[cell_mask]
        cw = self.cell_weights if cell_mask is None else self.cell_weights[cell_mask]
        h = self.h * points_scale if self.h else None
        return DiscreteMeasure(self.n, self.dim, ap * points_scale, aw * weight_scale,
                               cp * points_scale, cw * weight_scale, h)

    @property
    def atom_norms(self) -> np.ndarray:
        return np.linalg.norm(self.atom_weights, axis=1)

    @property
    def cell_norms(self) -> np.ndarray:
        return np.linalg.norm(self.cell_weights, axis=1)

    def total_variation(self) -> float:
        return float(self.atom_norms.sum() + self.cell_norms.sum())

    def is_zero(self) -> bool:
        return self.total_variation() == 0.0

    def mass_in(self, region: Region, closed: bool = False) -> float:
        """|mu|(region), atoms and cells counted by their representative point"""
        mass = 0.0
        if len(self.atom_points):
            mass += self.atom_norms[region.contains(self.atom_points, closed)].sum()
        if len(self.cell_points):
            mass += self.cell_norms[region.contains(self.cell_points, closed)].sum()
        return float(mass)

    def pushforward(self, t: float) -> "DiscreteMeasure":
        """Image under y -> t*y with weights unchanged"""
        return self._with(points_scale=float(t))

    def scaled(self, a: float) -> "DiscreteMeasure":
        return self._with(weight_scale=float(a))

    def support_radius(self, x0: Sequence[float]) -> float:
        x0 = np.asarray(x0, dtype=float)
        points = np.concatenate([self.atom_points, self.cell_points])
        if not len(points):
            return 0.0
        return float(np.max(np.linalg.norm(points - x0[None, :], axis=1)))

    def to_model(self) -> MeasureFile:
        return MeasureFile(atoms=[AtomModel(x=x.tolist(), w=w.tolist())
                                  for x, w in zip(self.atom_points, self.atom_weights)])

    @classmethod
    def from_model(cls, model: MeasureFile, density: Optional[GridFunction] = None) -> "DiscreteMeasure":
        if model.atoms:
            base = cls.from_atoms([a.x for a in model.atoms], [a.w for a in model.atoms])
        elif density is not None:
            base = cls.zero(density.n, density.dim)
        else:
            raise InputInvariantError("measure file has neither atoms nor a density")
        if density is None:
            return base
        cells = cls.from_density(density)
        if (cells.n, cells.dim) != (base.n, base.dim):
            raise DimensionMismatchError("atoms and density live in different spaces")
        return DiscreteMeasure(base.n, base.dim, base.atom_points, base.atom_weights,
                               cells.cell_points, cells.cell_weights, cells.h)

    def __repr__(self) -> str:
        return (f"DiscreteMeasure(n={self.n}, dim={self.dim}, atoms={len(self.atom_points)}, "
                f"cells={len(self.cell_points)}, h={self.h})")


def restrict(mu: DiscreteMeasure, region: Region) -> DiscreteMeasure:
    """mu restricted to the region; atoms and cells kept by their representative point"""
    if region.n != mu.n:
        raise DimensionMismatchError(f"region lives in R^{region.n}, measure in R^{mu.n}")
    return mu._with(atom_mask=region.contains(mu.atom_points) if len(mu.atom_points) else None,
                    cell_mask=region.contains(mu.cell_points) if len(mu.cell_points) else None)


@lru_cache(maxsize=None)
def cube_constant(n: int, s: float) -> float:
    """Integral of |y|^{s-n} over the unit cube [-1/2, 1/2]^n, finite for s > 0"""
    if n == 1:
        return 2 * 0.5 ** s / s
    x, w = leggauss(CUBE_QUADRATURE_POINTS)
    x, w = x / 2, w / 2
    mesh = np.meshgrid(*([x] * (n - 1)), indexing="ij")
    weights = np.ones_like(mesh[0])
    for wm in np.meshgrid(*([w] * (n - 1)), indexing="ij"):
        weights = weights * wm
    radius2 = 0.25 + sum(m ** 2 for m in mesh)
    # 2n pyramids over the faces, radial part integrates to 1/s
    return float(n / s * np.sum(weights * radius2 ** ((s - n) / 2)))


def riesz_potential(mu: DiscreteMeasure, s: float, x0: Sequence[float]) -> Potential:
    """I_s(mu)(x0) = sum |x0 - y|^{s-n} |mu|(y); the cell containing x0 integrated exactly"""
    if not s > 0:
        raise InputInvariantError(f"Riesz order s must be positive, got {s}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != mu.n:
        raise DimensionMismatchError(f"base point has length {x0.shape[0]}, expected n={mu.n}")
    n = mu.n
    total = 0.0
    if len(mu.atom_points):
        d = np.linalg.norm(mu.atom_points - x0[None, :], axis=1)
        norms = mu.atom_norms
        at_base = (d == 0) & (norms > 0)
        if np.any(at_base):
            if s < n:
                logger.debug("atom at the base point %s, I_%g is infinite", x0.tolist(), s)
                return Potential.inf()
            if s == n:
                total += norms[at_base].sum()
        away = d > 0
        total += float(np.sum(norms[away] * d[away] ** (s - n)))
    if len(mu.cell_points):
        offsets = mu.cell_points - x0[None, :]
        d = np.linalg.norm(offsets, axis=1)
        norms = mu.cell_norms
        sup = np.max(np.abs(offsets), axis=1)
        singular = np.zeros(len(d), dtype=bool)
        if np.min(sup) <= mu.h / 2 * (1 + 1e-12):
            singular[int(np.argmin(sup))] = True
        total += float(np.sum(norms[~singular] * d[~singular] ** (s - n)))
        if np.any(singular):
            total += float(norms[singular].sum()) * mu.h ** (s - n) * cube_constant(n, s)
    return Potential(value=total)


def riesz_potentials(mu: DiscreteMeasure, s: float, points: np.ndarray) -> List[Potential]:
    return parallel_map(lambda x: riesz_potential(mu, s, x), list(np.atleast_2d(points)))


def default_radii(mu: DiscreteMeasure, x0: Sequence[float]) -> List[float]:
    """Geometric ladder 2^{-j} R, R the smallest power of two enclosing the support"""
    reach = mu.support_radius(x0)
    if reach == 0.0:
        reach = mu.h or 1.0
    top = 2.0 ** np.ceil(np.log2(reach))
    return [float(top * 2.0 ** -j) for j in range(MAXIMAL_LADDER_RUNGS)]


def fractional_maximal(mu: DiscreteMeasure, k: int, x0: Sequence[float],
                       radii: Optional[Sequence[float]] = None) -> float:
    """max over radii of |mu|(closed B(x0, r)) / r^{n-k}"""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != mu.n:
        raise DimensionMismatchError(f"base point has length {x0.shape[0]}, expected n={mu.n}")
    radii = default_radii(mu, x0) if radii is None else list(radii)
    if not radii or any(r <= 0 for r in radii):
        raise InputInvariantError("radii must be a nonempty list of positive numbers")
    best = 0.0
    for r in radii:
        mass = mu.mass_in(Region.ball(x0, r), closed=True)
        best = max(best, mass / r ** (mu.n - k))
    return best
