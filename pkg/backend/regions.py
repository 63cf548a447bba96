"""
Balls and annuli, quadrature on them, and the L2 projection onto the
polynomial nullspace of an operator.

Annulus convention: A_lambda = B(x0, r) minus the closed ball B(x0, lambda*r).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb, gamma as gamma_fn, pi
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize, minimize_scalar
from scipy.special import roots_jacobi, roots_legendre

from errors import GridTooSmallError, InputInvariantError, RegionError, SingularGramError
from grid_function import GridFunction, derivative_field
from models import RegionModel
from polynomials import Polynomial, combine, monomial_index, monomials, multi_factorial, order

logger = logging.getLogger(__name__)

GRAM_COND_LIMIT = 1e12
CELL_SUBSAMPLES = 4
ABS_QUADRATURE_DEGREE = 48
CENTER_ZERO_TOL = 1e-12
BOUNDARY_SCAN_POINTS = 4096
REFINE_STARTS = 5


@dataclass(frozen=True)
class Region:
    kind: str
    center: np.ndarray
    radius: float
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "lam", float(self.lam))
        if self.kind not in ("ball", "annulus"):
            raise RegionError(f"unknown region kind '{self.kind}'")
        if not self.radius > 0:
            raise RegionError(f"radius must be positive, got {self.radius}")
        if not 0.0 <= self.lam <= 0.5:
            raise RegionError(f"lambda must lie in [0, 1/2], got {self.lam}")
        if self.kind == "ball" and self.lam != 0.0:
            raise RegionError("a ball has lambda = 0")

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Region":
        return cls("ball", center, radius, 0.0)

    @classmethod
    def annulus(cls, center: Sequence[float], radius: float, lam: float) -> "Region":
        return cls("annulus", center, radius, lam)

    @property
    def n(self) -> int:
        return self.center.shape[0]

    @property
    def inner_radius(self) -> float:
        return self.lam * self.radius

    def volume(self) -> float:
        unit = pi ** (self.n / 2) / gamma_fn(self.n / 2 + 1)
        return unit * self.radius ** self.n * (1.0 - self.lam ** self.n)

    def contains(self, points: np.ndarray, closed: bool = False) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.linalg.norm(points - self.center[None, :], axis=1)
        inside = d <= self.radius if closed else d < self.radius
        if self.kind == "annulus":
            inside &= d > self.inner_radius
        return inside

    def scaled(self, s: float) -> "Region":
        """Same center, radius multiplied by s"""
        return Region(self.kind, self.center, self.radius * s, self.lam)

    def moved(self, center: Sequence[float], radius: Optional[float] = None) -> "Region":
        return Region(self.kind, center, self.radius if radius is None else radius, self.lam)

    def to_model(self) -> RegionModel:
        return RegionModel(kind=self.kind, center=self.center.tolist(), radius=self.radius, lambda_=self.lam)

    @classmethod
    def from_model(cls, model: RegionModel) -> "Region":
        return cls(model.kind, model.center, model.radius, model.lambda_)


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))

    def mean(self, values: np.ndarray) -> np.ndarray:
        return self.integrate(values) / self.weights.sum()


def monomial_integral(beta: Sequence[int], region: Region) -> float:
    """Exact integral of (x - x0)^beta over the region"""
    if any(b % 2 for b in beta):
        return 0.0
    n = len(beta)
    total = order(beta)
    angular = 2.0
    for b in beta:
        angular *= gamma_fn((b + 1) / 2)
    angular /= gamma_fn((total + n) / 2)
    p = total + n
    return angular * (region.radius ** p - region.inner_radius ** p) / p


@lru_cache(maxsize=None)
def _sphere_rule(n: int, degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points and weights on S^{n-1}, exact for polynomials of the given degree"""
    if n == 2:
        m = degree + 2
        theta = 2 * pi * np.arange(m) / m
        return np.stack([np.cos(theta), np.sin(theta)], axis=1), np.full(m, 2 * pi / m)
    a = (n - 3) / 2
    t, wt = roots_jacobi(degree // 2 + 1, a, a)
    sub_pts, sub_w = _sphere_rule(n - 1, degree)
    s = np.sqrt(np.clip(1 - t ** 2, 0.0, None))
    pts = np.concatenate([t[:, None, None].repeat(len(sub_w), 1),
                          s[:, None, None] * sub_pts[None, :, :]], axis=2)
    return pts.reshape(-1, n), (wt[:, None] * sub_w[None, :]).reshape(-1)


@lru_cache(maxsize=None)
def _reference_rule(n: int, degree: int, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Rule on the unit ball (lam = 0) or unit annulus centered at the origin"""
    x, w = roots_legendre((degree + n) // 2 + 1)
    rho = lam + (1 - lam) * (x + 1) / 2
    w_rho = w * (1 - lam) / 2 * rho ** (n - 1)
    sphere, w_sphere = _sphere_rule(n, degree)
    nodes = (rho[:, None, None] * sphere[None, :, :]).reshape(-1, n)
    weights = (w_rho[:, None] * w_sphere[None, :]).reshape(-1)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def region_quadrature(region: Region, degree: int) -> Quadrature:
    """Polar/spherical tensor rule, exact for polynomials of total degree <= degree"""
    nodes, weights = _reference_rule(region.n, max(int(degree), 0), region.lam)
    return Quadrature(region.center[None, :] + region.radius * nodes,
                      region.radius ** region.n * weights)


def grid_weights(u: GridFunction, region: Region,
                 subsamples: int = CELL_SUBSAMPLES) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-clipped integration weights: (flat lattice indices, points, weights)"""
    if region.n != u.n:
        raise RegionError(f"region lives in R^{region.n}, grid in R^{u.n}")
    start, stop = u.index_window(region.center - region.radius, region.center + region.radius)
    ranges = [np.arange(a, b + 1) for a, b in zip(start, stop)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    multi = np.stack([m.reshape(-1) for m in mesh], axis=1)
    points = u.coordinates(multi)
    d = np.linalg.norm(points - region.center[None, :], axis=1)
    half_diag = u.h * np.sqrt(u.n) / 2
    inner = region.inner_radius if region.kind == "annulus" else -np.inf
    full = (d + half_diag < region.radius) & (d - half_diag > inner)
    empty = (d - half_diag >= region.radius) | (d + half_diag <= inner)
    frac = full.astype(float)
    partial = ~full & ~empty
    if np.any(partial):
        offsets_1d = ((np.arange(subsamples) + 0.5) / subsamples - 0.5) * u.h
        grids = np.meshgrid(*([offsets_1d] * u.n), indexing="ij")
        offsets = np.stack([g.reshape(-1) for g in grids], axis=1)
        sub = points[partial][:, None, :] + offsets[None, :, :]
        hits = region.contains(sub.reshape(-1, u.n)).reshape(-1, len(offsets))
        frac[partial] = hits.mean(axis=1)
    keep = frac > 0
    flat = np.ravel_multi_index(tuple(multi[keep].T), u.shape)
    return flat, points[keep], frac[keep] * u.cell_volume


def grid_mean(u: GridFunction, region: Region) -> np.ndarray:
    flat, _, w = grid_weights(u, region)
    return w @ u.flat_values()[flat] / w.sum()


Integrand = Union[Polynomial, GridFunction, Callable[[np.ndarray], np.ndarray]]


def _sample(u: Integrand, region: Region, degree: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes, weights and values of u for integration over the region"""
    if isinstance(u, GridFunction):
        flat, points, weights = grid_weights(u, region)
        return points, weights, u.flat_values()[flat]
    quad = region_quadrature(region, degree)
    values = u.evaluate(quad.nodes) if isinstance(u, Polynomial) else u(quad.nodes)
    values = np.asarray(values, dtype=float).reshape(len(quad.weights), -1)
    return quad.nodes, quad.weights, values


def _local_basis_values(basis, region: Region, points: np.ndarray) -> np.ndarray:
    """e_i((x - x0) / r) for each basis element, shape (N, nb, dim)"""
    local = (points - region.center[None, :]) / region.radius
    return np.stack([e.evaluate(local) for e in basis.basis], axis=1)


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(gram)
    logger.debug("projection Gram matrix condition number %.3e", cond)
    if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
        raise SingularGramError(f"Gram matrix of the nullspace basis is numerically singular (cond={cond:.3e})")
    try:
        factor = cho_factor(gram, lower=True)
    except LinAlgError:
        raise SingularGramError("Gram matrix of the nullspace basis is not positive definite")
    return cho_solve(factor, rhs)


def projection_coefficients(values: np.ndarray, weights: np.ndarray, local: np.ndarray) -> np.ndarray:
    """Coefficients c with Pi u = sum_i c_i e_i((x - x0)/r)"""
    gram = np.einsum("a,aid,ajd->ij", weights, local, local)
    rhs = np.einsum("a,ad,aid->i", weights, values, local)
    return _solve_gram(gram, rhs)


def _check_basis(basis, region: Region, dim: int) -> None:
    if not basis.basis:
        raise InputInvariantError("nullspace basis is empty")
    e = basis.basis[0]
    if e.n != region.n or e.dim != dim:
        raise InputInvariantError(f"basis maps R^{e.n} -> R^{e.dim}, integrand is R^{region.n} -> R^{dim}")


def project_l2(u: Integrand, basis, region: Region, degree: Optional[int] = None) -> Polynomial:
    """L2(region)-orthogonal projection of u onto span(basis), returned in global coordinates"""
    degree = 2 * basis.degree + 2 if degree is None else degree
    nodes, weights, values = _sample(u, region, degree)
    _check_basis(basis, region, values.shape[1])
    local = _local_basis_values(basis, region, nodes)
    coeffs = projection_coefficients(values, weights, local)
    pulled = [e.affine_pullback(region.center, region.radius) for e in basis.basis]
    return combine(pulled, coeffs)


def projection_residual(u: Integrand, basis, region: Region, degree: Optional[int] = None) -> float:
    """Mean over the region of |u - Pi u|, evaluated on the same nodes as the projection"""
    degree = 2 * basis.degree + 2 if degree is None else degree
    nodes, weights, values = _sample(u, region, degree)
    _check_basis(basis, region, values.shape[1])
    local = _local_basis_values(basis, region, nodes)
    coeffs = projection_coefficients(values, weights, local)
    projected = np.einsum("i,aid->ad", coeffs, local)
    return float(weights @ np.linalg.norm(values - projected, axis=1) / weights.sum())


def l1_stability_ratio(u: Integrand, basis, region: Region, degree: Optional[int] = None) -> float:
    """mean |Pi u| / mean |u| over the region"""
    degree = max(2 * basis.degree + 2, ABS_QUADRATURE_DEGREE) if degree is None else degree
    nodes, weights, values = _sample(u, region, degree)
    _check_basis(basis, region, values.shape[1])
    local = _local_basis_values(basis, region, nodes)
    coeffs = projection_coefficients(values, weights, local)
    projected = np.einsum("i,aid->ad", coeffs, local)
    denom = weights @ np.linalg.norm(values, axis=1)
    if denom == 0:
        raise InputInvariantError("L1-stability ratio is undefined for u = 0")
    return float(weights @ np.linalg.norm(projected, axis=1) / denom)


def mean_abs(q: Polynomial, region: Region, degree: Optional[int] = None) -> float:
    if degree is None:
        degree = max(4 * q.degree + 24, ABS_QUADRATURE_DEGREE)
    quad = region_quadrature(region, degree)
    return float(quad.mean(np.linalg.norm(q.evaluate(quad.nodes), axis=1)))


def _circle_peaks(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the largest local maxima of a periodic scan"""
    peaks = np.flatnonzero((values >= np.roll(values, 1)) & (values >= np.roll(values, -1)))
    return peaks[np.argsort(values[peaks])[-count:]]


def _sphere_sup(value: Callable[[np.ndarray], np.ndarray], n: int, degree: int) -> float:
    """max of value over the unit sphere: dense scan, then a search along the sphere"""
    if n == 2:
        m = max(BOUNDARY_SCAN_POINTS, 64 * (degree + 2))
        theta = 2 * pi * np.arange(m) / m
        scan = value(np.stack([np.cos(theta), np.sin(theta)], axis=1))
        best = float(scan.max())
        step = 2 * pi / m
        for i in _circle_peaks(scan, REFINE_STARTS):
            result = minimize_scalar(lambda t: -value(np.array([np.cos(t), np.sin(t)]))[0],
                                     bounds=(theta[i] - step, theta[i] + step), method="bounded",
                                     options={"xatol": 1e-13})
            best = max(best, -float(result.fun))
        return best
    points, _ = _sphere_rule(n, degree)
    scan = value(points)
    best = float(scan.max())
    for start in points[np.argsort(scan)[-REFINE_STARTS:]]:
        # w / |w| keeps every iterate on the sphere
        result = minimize(lambda w: -value(w / np.linalg.norm(w))[0] ** 2, start, method="BFGS",
                          options={"gtol": 1e-12})
        best = max(best, float(value(result.x / np.linalg.norm(result.x))[0]))
    return best


def sup_norm(q: Polynomial, ball: Region, degree: Optional[int] = None) -> float:
    """max over the closed ball of |q|: interior refinement and a separate search on the boundary sphere"""
    if degree is None:
        degree = max(4 * q.degree + 24, ABS_QUADRATURE_DEGREE)

    def value(z: np.ndarray) -> np.ndarray:
        return np.linalg.norm(q.evaluate(ball.center[None, :] + ball.radius * np.atleast_2d(z)), axis=1)

    unit = Region.ball(np.zeros(ball.n), 1.0)
    interior = np.concatenate([np.zeros((1, ball.n)), region_quadrature(unit, degree).nodes])
    scan = value(interior)
    best = float(scan.max())
    for start in interior[np.argsort(scan)[-REFINE_STARTS:]]:
        result = minimize(lambda z: -value(z)[0] ** 2, start, method="SLSQP",
                          constraints=[{"type": "ineq", "fun": lambda z: 1.0 - z @ z}],
                          options={"ftol": 1e-15, "maxiter": 200})
        # SLSQP may step slightly outside; pull back onto the ball
        z = result.x / max(1.0, float(np.linalg.norm(result.x)))
        best = max(best, float(value(z)[0]))
    return max(best, _sphere_sup(value, ball.n, degree))


def inverse_estimate_ratio(q: Polynomial, ball: Region) -> float:
    """||q||_{L^inf(B)} / mean_B |q|"""
    if q.is_zero():
        raise InputInvariantError("inverse estimate ratio is undefined for q = 0")
    return sup_norm(q, ball) / mean_abs(q, ball)


def center_vanishing_ratio(q: Polynomial, ball: Region, lam: float) -> float:
    """mean_{lam B} |q| / mean_B |q| for q vanishing at the center of B

    Both means use the same reference rule mapped onto the ball, so the nodes
    of lam*B are the nodes of B scaled by lam. For q homogeneous of degree d
    about the center every sample scales by lam^d, the rule's error on the
    kink of |q| scales with it, and the quotient is lam^d up to rounding.
    """
    if not 0 < lam <= 1:
        raise InputInvariantError(f"lambda must lie in (0, 1], got {lam}")
    if np.linalg.norm(q.evaluate(ball.center)) > CENTER_ZERO_TOL * max(q.coefficient_norm(), 1e-300):
        raise InputInvariantError("q does not vanish at the center of the ball")
    if q.is_zero():
        raise InputInvariantError("center vanishing ratio is undefined for q = 0")
    return mean_abs(q, ball.scaled(lam)) / mean_abs(q, ball)


def averaged_taylor(u: GridFunction, m: int, ball: Region) -> Polynomial:
    """Averaged Taylor polynomial of order m over the ball, derivatives by finite differences"""
    if ball.kind != "ball":
        raise RegionError("the averaged Taylor polynomial is taken over a ball")
    if 2 * ball.radius < 4 * u.h:
        raise GridTooSmallError(f"ball of radius {ball.radius} spans fewer than 4 cells of size {u.h}")
    u.require_ball(ball.center, ball.radius)
    flat, points, weights = grid_weights(u, ball)
    volume = weights.sum()
    local = points - ball.center[None, :]
    index = monomial_index(u.n, m)
    coeffs = np.zeros((len(index), u.dim))
    for alpha in monomials(u.n, m):
        d_alpha = derivative_field(u, alpha).reshape(-1, u.dim)[flat]
        for gam in monomials(u.n, order(alpha)):
            if any(g > a for g, a in zip(gam, alpha)):
                continue
            weight = 1.0
            for a, g in zip(alpha, gam):
                weight *= comb(a, g)
            rest = np.prod((-local) ** (np.array(alpha) - np.array(gam))[None, :], axis=1)
            coeffs[index[gam]] += weight / multi_factorial(alpha) * ((weights * rest) @ d_alpha) / volume
    return Polynomial(u.n, u.dim, m, coeffs).affine_pullback(ball.center, 1.0)
