"""
Vector-valued polynomials in n variables.

Coefficients are stored densely against the graded-lexicographic monomial
list returned by `monomials(n, degree)`: total degree ascending, and inside
one degree the exponent tuples in descending lexicographic order, e.g.
for n=2: 1, x, y, x^2, xy, y^2, ...
"""
import itertools
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

MultiIndex = Tuple[int, ...]


@lru_cache(maxsize=None)
def homogeneous_indices(n: int, order: int) -> Tuple[MultiIndex, ...]:
    """All multi-indices alpha in N_0^n with |alpha| = order, lexicographically descending"""
    if n == 1:
        return ((order,),)
    out = []
    for first in range(order, -1, -1):
        for rest in homogeneous_indices(n - 1, order - first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def monomials(n: int, degree: int) -> Tuple[MultiIndex, ...]:
    """Graded-lex list of multi-indices with |alpha| <= degree"""
    if degree < 0:
        return ()
    out = []
    for order in range(degree + 1):
        out.extend(homogeneous_indices(n, order))
    return tuple(out)


@lru_cache(maxsize=None)
def monomial_index(n: int, degree: int) -> Dict[MultiIndex, int]:
    return {alpha: i for i, alpha in enumerate(monomials(n, degree))}


def order(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def falling_factorial(beta: Sequence[int], alpha: Sequence[int]) -> int:
    """Coefficient of x^(beta-alpha) in d^alpha x^beta (zero unless alpha <= beta)"""
    value = 1
    for b, a in zip(beta, alpha):
        if a > b:
            return 0
        value *= factorial(b) // factorial(b - a)
    return value


def multi_factorial(alpha: Sequence[int]) -> int:
    value = 1
    for a in alpha:
        value *= factorial(a)
    return value


def monomial_values(points: np.ndarray, n: int, degree: int) -> np.ndarray:
    """Matrix of shape (N, #monomials) with entries x^alpha"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != n:
        raise ValueError(f"points have {points.shape[1]} coordinates, expected {n}")
    powers = points[:, :, None] ** np.arange(degree + 1)[None, None, :]
    alphas = np.array(monomials(n, degree), dtype=int).reshape(-1, n)
    values = np.ones((points.shape[0], len(alphas)))
    for i in range(n):
        values *= powers[:, i, alphas[:, i]]
    return values


class Polynomial:
    """A polynomial map R^n -> R^dim of total degree at most `degree`"""

    def __init__(self, n: int, dim: int, degree: int, coeffs: Optional[np.ndarray] = None):
        self.n = int(n)
        self.dim = int(dim)
        self.degree = max(int(degree), 0)
        size = len(monomials(self.n, self.degree))
        if coeffs is None:
            coeffs = np.zeros((size, self.dim))
        coeffs = np.array(coeffs, dtype=float).reshape(size, self.dim)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("polynomial coefficients must be finite")
        coeffs.setflags(write=False)
        self.coeffs = coeffs

    @classmethod
    def zero(cls, n: int, dim: int, degree: int = 0) -> "Polynomial":
        return cls(n, dim, degree)

    @classmethod
    def from_terms(cls, n: int, dim: int, terms: Dict[MultiIndex, Sequence[float]],
                   degree: Optional[int] = None) -> "Polynomial":
        if degree is None:
            degree = max((order(a) for a in terms), default=0)
        index = monomial_index(n, degree)
        coeffs = np.zeros((len(index), dim))
        for alpha, vector in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"multi-index {alpha} has length {len(alpha)}, expected {n}")
            coeffs[index[alpha]] += np.asarray(vector, dtype=float).reshape(dim)
        return cls(n, dim, degree, coeffs)

    @property
    def monomials(self) -> Tuple[MultiIndex, ...]:
        return monomials(self.n, self.degree)

    def terms(self, tol: float = 0.0) -> Dict[MultiIndex, np.ndarray]:
        return {
            alpha: self.coeffs[i].copy()
            for i, alpha in enumerate(self.monomials)
            if np.max(np.abs(self.coeffs[i])) > tol
        }

    def coefficient_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs), initial=0.0) <= tol)

    def effective_degree(self, tol: float = 1e-12) -> int:
        scale = max(self.coefficient_norm(), 1.0)
        degree = 0
        for i, alpha in enumerate(self.monomials):
            if np.max(np.abs(self.coeffs[i])) > tol * scale:
                degree = max(degree, order(alpha))
        return degree

    def raised(self, degree: int) -> "Polynomial":
        """Same polynomial with a larger degree bound"""
        if degree <= self.degree:
            return self
        index = monomial_index(self.n, degree)
        coeffs = np.zeros((len(index), self.dim))
        for i, alpha in enumerate(self.monomials):
            coeffs[index[alpha]] = self.coeffs[i]
        return Polynomial(self.n, self.dim, degree, coeffs)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        single = points.ndim == 1
        values = monomial_values(points, self.n, self.degree) @ self.coeffs
        return values[0] if single else values

    __call__ = evaluate

    def derivative(self, alpha: Sequence[int]) -> "Polynomial":
        """Exact d^alpha via the falling-factorial rule on monomials"""
        alpha = tuple(int(a) for a in alpha)
        out_degree = self.degree - order(alpha)
        if out_degree < 0:
            return Polynomial.zero(self.n, self.dim)
        index = monomial_index(self.n, out_degree)
        coeffs = np.zeros((len(index), self.dim))
        for i, beta in enumerate(self.monomials):
            weight = falling_factorial(beta, alpha)
            if weight:
                target = tuple(b - a for b, a in zip(beta, alpha))
                coeffs[index[target]] += weight * self.coeffs[i]
        return Polynomial(self.n, self.dim, out_degree, coeffs)

    def derivative_tensor(self, ell: int) -> "Polynomial":
        """nabla^ell as one polynomial whose components run over (|alpha| = ell, component)"""
        if ell == 0:
            return self
        parts = [self.derivative(alpha) for alpha in homogeneous_indices(self.n, ell)]
        degree = max(p.degree for p in parts)
        parts = [p.raised(degree) for p in parts]
        coeffs = np.concatenate([p.coeffs for p in parts], axis=1)
        return Polynomial(self.n, self.dim * len(parts), degree, coeffs)

    def rescaled(self, t: float) -> "Polynomial":
        """x -> q(x / t)"""
        degrees = np.array([order(a) for a in self.monomials], dtype=float)
        return Polynomial(self.n, self.dim, self.degree,
                          self.coeffs * (float(t) ** -degrees)[:, None])

    def affine_pullback(self, center: Sequence[float], scale: float = 1.0) -> "Polynomial":
        """x -> q((x - center) / scale), expanded in the global monomials"""
        center = np.asarray(center, dtype=float).reshape(self.n)
        index = self._index
        coeffs = np.zeros_like(self.coeffs)
        for i, beta in enumerate(self.monomials):
            c = self.coeffs[i]
            if not np.any(c):
                continue
            c = c * float(scale) ** (-order(beta))
            for gamma in itertools.product(*(range(b + 1) for b in beta)):
                weight = 1.0
                for b, g, x0 in zip(beta, gamma, center):
                    weight *= comb(b, g) * (-x0) ** (b - g)
                if weight:
                    coeffs[index[gamma]] += weight * c
        return Polynomial(self.n, self.dim, self.degree, coeffs)

    @property
    def _index(self) -> Dict[MultiIndex, int]:
        return monomial_index(self.n, self.degree)

    def _aligned(self, other: "Polynomial") -> Tuple["Polynomial", "Polynomial"]:
        if (self.n, self.dim) != (other.n, other.dim):
            raise ValueError("polynomials live in different spaces")
        degree = max(self.degree, other.degree)
        return self.raised(degree), other.raised(degree)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self._aligned(other)
        return Polynomial(a.n, a.dim, a.degree, a.coeffs + b.coeffs)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        a, b = self._aligned(other)
        return Polynomial(a.n, a.dim, a.degree, a.coeffs - b.coeffs)

    def __mul__(self, scalar: float) -> "Polynomial":
        return Polynomial(self.n, self.dim, self.degree, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Polynomial":
        return self * -1.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "degree": self.degree,
            "terms": [
                {"alpha": list(alpha), "coeffs": [float(c) for c in self.coeffs[i]]}
                for i, alpha in enumerate(self.monomials)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polynomial":
        terms = {tuple(t["alpha"]): t["coeffs"] for t in data["terms"]}
        return cls.from_terms(int(data["n"]), int(data["dim"]), terms, int(data["degree"]))

    def __repr__(self) -> str:
        return f"Polynomial(n={self.n}, dim={self.dim}, degree={self.degree})"


def combine(polys: Iterable[Polynomial], weights: Iterable[float]) -> Polynomial:
    polys = list(polys)
    weights = list(weights)
    if not polys:
        raise ValueError("cannot combine an empty list of polynomials")
    degree = max(p.degree for p in polys)
    coeffs = sum(w * p.raised(degree).coeffs for p, w in zip(polys, weights))
    return Polynomial(polys[0].n, polys[0].dim, degree, coeffs)


def basis_coefficients(polys: List[Polynomial], degree: int) -> np.ndarray:
    """Stack polynomials as columns of flattened (monomial, component) coefficient vectors"""
    return np.stack([p.raised(degree).coeffs.reshape(-1) for p in polys], axis=1)
