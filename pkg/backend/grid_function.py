"""
Functions sampled on a uniform axis-aligned lattice, and the finite-difference
stencils used to differentiate them.

Lattice point i on axis a sits at lower[a] + i*h; each point represents the
cell [x - h/2, x + h/2]^n of volume h^n.
"""
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from errors import GridTooSmallError, InputInvariantError, RegionError
from polynomials import homogeneous_indices


LATTICE_TOL = 1e-6


class GridFunction:
    """A dim-valued function sampled on the lattice of the box [lower, upper]"""

    def __init__(self, lower: Sequence[float], upper: Sequence[float], h: float, values: np.ndarray):
        self.lower = np.asarray(lower, dtype=float).reshape(-1)
        self.upper = np.asarray(upper, dtype=float).reshape(-1)
        self.h = float(h)
        if self.lower.shape != self.upper.shape:
            raise InputInvariantError("lower and upper corners have different lengths")
        if self.h <= 0:
            raise InputInvariantError(f"grid spacing must be positive, got {h}")
        values = np.asarray(values, dtype=float)
        if values.ndim == self.n:
            values = values[..., None]
        cells = (self.upper - self.lower) / self.h
        expected = tuple(int(round(c)) + 1 for c in cells)
        if np.any(np.abs(cells - np.round(cells)) > LATTICE_TOL) or np.any(cells < 1):
            raise InputInvariantError("box extent is not a positive multiple of the spacing h")
        if values.shape[:-1] != expected:
            raise InputInvariantError(f"values have lattice shape {values.shape[:-1]}, box and h give {expected}")
        if not np.all(np.isfinite(values)):
            raise InputInvariantError("grid values must be finite")
        values.setflags(write=False)
        self.values = values

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[-1]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def axes(self) -> List[np.ndarray]:
        return [self.lower[a] + self.h * np.arange(self.shape[a]) for a in range(self.n)]

    def coordinates(self, multi_index: np.ndarray) -> np.ndarray:
        """Points for an (N, n) array of lattice indices"""
        return self.lower[None, :] + self.h * np.asarray(multi_index, dtype=float)

    def index_window(self, lo: Sequence[float], hi: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        """Inclusive lattice index range whose cells meet the box [lo, hi]"""
        start = np.floor((np.asarray(lo) - self.lower) / self.h - 0.5).astype(int)
        stop = np.ceil((np.asarray(hi) - self.lower) / self.h + 0.5).astype(int)
        start = np.clip(start, 0, np.array(self.shape) - 1)
        stop = np.clip(stop, 0, np.array(self.shape) - 1)
        return start, stop

    def contains_ball(self, center: Sequence[float], radius: float) -> bool:
        center = np.asarray(center, dtype=float)
        return bool(np.all(center - radius >= self.lower - 1e-12) and np.all(center + radius <= self.upper + 1e-12))

    def require_ball(self, center: Sequence[float], radius: float) -> None:
        if not self.contains_ball(center, radius):
            raise RegionError(f"ball B({list(np.round(center, 12))}, {radius}) leaves the grid box "
                              f"[{self.lower.tolist()}, {self.upper.tolist()}]")

    def flat_values(self) -> np.ndarray:
        return self.values.reshape(-1, self.dim)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.lower, self.upper, self.h, values)

    def rescaled(self, t: float) -> "GridFunction":
        """x -> u(x / t): same samples on the box scaled by t"""
        return GridFunction(self.lower * t, self.upper * t, self.h * t, self.values)

    def sample(self, points: np.ndarray) -> np.ndarray:
        """Multilinear interpolation of the samples, shape (N, dim)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        interpolator = RegularGridInterpolator(tuple(self.axes()), self.values, method="linear")
        return interpolator(points)

    def same_box(self, other: "GridFunction") -> bool:
        return bool(np.allclose(self.lower, other.lower) and np.allclose(self.upper, other.upper))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], lower: Sequence[float],
                      upper: Sequence[float], h: float) -> "GridFunction":
        """Sample f (points (N, n) -> (N,) or (N, dim)) on the lattice"""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        shape = tuple(int(round(c)) + 1 for c in (upper - lower) / h)
        axes = [lower[a] + h * np.arange(shape[a]) for a in range(len(shape))]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=1)
        values = np.asarray(f(points), dtype=float)
        values = values.reshape(shape + (-1,))
        return cls(lower, upper, h, values)

    def __repr__(self) -> str:
        return f"GridFunction(n={self.n}, dim={self.dim}, shape={self.shape}, h={self.h})"


@lru_cache(maxsize=None)
def central_stencil(p: int) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    """Second-order central difference for d^p/dx^p on offsets -w..w, w = (p+1)//2"""
    w = (p + 1) // 2
    offsets = np.arange(-w, w + 1)
    vander = np.vander(offsets.astype(float), increasing=True).T
    rhs = np.zeros(len(offsets))
    rhs[p] = factorial(p)
    coeffs = np.linalg.solve(vander, rhs)
    coeffs = [float(Fraction(c).limit_denominator(10 ** 6)) for c in coeffs]
    return tuple(int(o) for o in offsets), tuple(coeffs)


def stencil_margin(alphas: Iterable[Sequence[int]]) -> int:
    return max((max((a + 1) // 2 for a in alpha) for alpha in alphas), default=0)


def fd_partial(values: np.ndarray, alpha: Sequence[int], h: float, margin: int) -> np.ndarray:
    """d^alpha by tensor-product central stencils, cropped by `margin` lattice points on every side"""
    n = len(alpha)
    out = values
    for axis in range(n):
        size = out.shape[axis]
        if alpha[axis] == 0:
            out = np.take(out, np.arange(margin, size - margin), axis=axis)
            continue
        offsets, coeffs = central_stencil(alpha[axis])
        acc = None
        for off, c in zip(offsets, coeffs):
            if c == 0:
                continue
            part = c * np.take(out, np.arange(margin + off, size - margin + off), axis=axis)
            acc = part if acc is None else acc + part
        out = acc
    return out / h ** sum(alpha)


def derivative_field(u: GridFunction, alpha: Sequence[int]) -> np.ndarray:
    """d^alpha u on the full lattice: repeated np.gradient, one-sided second order at the box faces"""
    out = np.asarray(u.values)
    for axis, times in enumerate(alpha):
        for _ in range(times):
            if u.shape[axis] < 3:
                raise GridTooSmallError("at least 3 lattice points per axis are needed to differentiate")
            out = np.gradient(out, u.h, axis=axis, edge_order=2)
    return out


def gradient_tensor(u: GridFunction, ell: int) -> GridFunction:
    """nabla^ell u on the full lattice; components ordered (|alpha| = ell graded-lex, component)"""
    if ell == 0:
        return u
    parts = [derivative_field(u, alpha) for alpha in homogeneous_indices(u.n, ell)]
    return u.with_values(np.concatenate(parts, axis=-1))
