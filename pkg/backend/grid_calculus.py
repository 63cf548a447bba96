"""
A applied to grid functions by finite differences, the variation measure
|Au|, and dyadic ball/annulus profiles around a point.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionMismatchError, GridTooSmallError
from grid_function import GridFunction, fd_partial, gradient_tensor, stencil_margin
from measures import DiscreteMeasure, Potential, restrict, riesz_potential
from models import ProfileModel
from operator_core import Operator
from poly_nullspace import NullspaceBasis, stabilized_nullspace
from regions import Region, grid_weights, project_l2, projection_residual

logger = logging.getLogger(__name__)

MIN_CELLS_PER_RADIUS = 8
ANNULUS_LAMBDA = 0.25
TELESCOPING_TOL = 1e-6


def apply_operator_fd(op: Operator, u: GridFunction) -> GridFunction:
    """A u by second-order central differences on the interior lattice"""
    if u.dim != op.dim_v:
        raise DimensionMismatchError(f"grid function is {u.dim}-valued, operator expects dim_v={op.dim_v}")
    if u.n != op.n:
        raise DimensionMismatchError(f"grid lives in R^{u.n}, operator in R^{op.n}")
    if any(size - 1 < op.k + 2 for size in u.shape):
        raise GridTooSmallError(f"grid of shape {u.shape} is narrower than k+2={op.k + 2} cells")
    margin = stencil_margin(op.alphas)
    if any(size <= 2 * margin for size in u.shape):
        raise GridTooSmallError(f"grid of shape {u.shape} has no interior for stencil margin {margin}")
    out = None
    for alpha, mat in op.terms.items():
        part = np.einsum("...v,wv->...w", fd_partial(u.values, alpha, u.h, margin), mat)
        out = part if out is None else out + part
    return GridFunction(u.lower + margin * u.h, u.upper - margin * u.h, u.h, out)


def variation_measure(op: Operator, u: GridFunction) -> DiscreteMeasure:
    """|Au| as lattice cells carrying the finite-difference density"""
    return DiscreteMeasure.from_density(apply_operator_fd(op, u))


def _mean_and_osc(u: GridFunction, region: Region) -> Tuple[np.ndarray, float]:
    flat, _, w = grid_weights(u, region)
    values = u.flat_values()[flat]
    mean = w @ values / w.sum()
    osc = float(w @ np.linalg.norm(values - mean[None, :], axis=1) / w.sum())
    return mean, osc


@dataclass(frozen=True)
class OscillationProfile:
    center: np.ndarray
    radius: float
    levels: List[int]
    mean: List[np.ndarray]
    osc: List[float]
    annulus_mean: List[np.ndarray]
    annulus_osc: List[float]
    potential: List[Potential]
    annulus_variation: List[float]
    ball_residual: Optional[List[float]] = None
    annulus_residual: Optional[List[float]] = None

    @property
    def n(self) -> int:
        return self.center.shape[0]

    def to_model(self) -> ProfileModel:
        return ProfileModel(
            center=self.center.tolist(),
            radius=self.radius,
            levels=self.levels,
            mean=[m.tolist() for m in self.mean],
            osc=self.osc,
            annulus_mean=[m.tolist() for m in self.annulus_mean],
            annulus_osc=self.annulus_osc,
            potential=[p.to_model() for p in self.potential],
            ball_residual=self.ball_residual,
            annulus_residual=self.annulus_residual,
            annulus_variation=self.annulus_variation,
            telescoping_slack=telescoping_slack(self),
            oscillation_ratio=oscillation_ratio(self),
            annulus_ratio=annulus_ratio(self),
        )


def level_limit(r: float, h: float) -> int:
    """Largest j with 2^{-j} r >= MIN_CELLS_PER_RADIUS * h"""
    return int(np.floor(np.log2(r / (MIN_CELLS_PER_RADIUS * h)) + 1e-12))


def dyadic_profile(u: GridFunction, op: Operator, x0: Sequence[float], r: float, j_max: int,
                   s: Optional[float] = None, basis: Optional[NullspaceBasis] = None,
                   measure: Optional[DiscreteMeasure] = None) -> OscillationProfile:
    """Means, oscillations, annulus data and I_s(|Au| restricted)(x0) on B(x0, 2^{-j} r), j = 0..j_max"""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    u.require_ball(x0, r)
    limit = level_limit(r, u.h)
    if limit < 0:
        raise GridTooSmallError(f"radius {r} is below {MIN_CELLS_PER_RADIUS} cells of size {u.h}")
    if j_max > limit:
        logger.warning("j_max=%d reduced to %d to keep %d cells per radius", j_max, limit, MIN_CELLS_PER_RADIUS)
        j_max = limit
    s = float(op.k) if s is None else float(s)
    mu = variation_measure(op, u) if measure is None else measure
    mu = restrict(mu, Region.ball(x0, r))
    if basis is None:
        result = stabilized_nullspace(op, max(8, op.k + 2))
        basis = result.basis

    levels = list(range(j_max + 1))
    means, oscs, a_means, a_oscs, potentials, a_var = [], [], [], [], [], []
    b_res = [] if basis else None
    a_res = [] if basis else None
    for j in levels:
        rho = r * 2.0 ** -j
        ball = Region.ball(x0, rho)
        annulus = Region.annulus(x0, rho, ANNULUS_LAMBDA)
        mean, osc = _mean_and_osc(u, ball)
        a_mean, a_osc = _mean_and_osc(u, annulus)
        mu = restrict(mu, ball)
        means.append(mean)
        oscs.append(osc)
        a_means.append(a_mean)
        a_oscs.append(a_osc)
        potentials.append(riesz_potential(mu, s, x0))
        a_var.append(mu.mass_in(annulus))
        if basis:
            b_res.append(projection_residual(u, basis, ball))
            a_res.append(projection_residual(u, basis, annulus))
    logger.debug("profile at %s: osc %s", x0.tolist(), np.round(oscs, 6).tolist())
    return OscillationProfile(center=x0, radius=float(r), levels=levels, mean=means, osc=oscs,
                              annulus_mean=a_means, annulus_osc=a_oscs, potential=potentials,
                              annulus_variation=a_var, ball_residual=b_res, annulus_residual=a_res)


def telescoping_slack(profile: OscillationProfile) -> float:
    """max over l < j of |mean_j - mean_l| / (2^n sum_{i=l..j} osc_i); at most 1 up to quadrature"""
    worst = 0.0
    factor = 2.0 ** profile.n
    for l in range(len(profile.levels)):
        for j in range(l + 1, len(profile.levels)):
            gap = float(np.linalg.norm(profile.mean[j] - profile.mean[l]))
            bound = factor * sum(profile.osc[l:j + 1])
            if bound > 0:
                worst = max(worst, gap / bound)
            elif gap > TELESCOPING_TOL:
                return float("inf")
    return worst


def oscillation_ratio(profile: OscillationProfile) -> Optional[float]:
    """sum_j osc_j / (osc_0 + potential_0)"""
    first = profile.potential[0]
    if first.infinite:
        return 0.0
    denom = profile.osc[0] + first.value
    if denom <= 0:
        return None
    return float(sum(profile.osc) / denom)


def annulus_ratio(profile: OscillationProfile) -> Optional[float]:
    """max_j annulus_osc_j / (2^{-j} annulus_osc_0 + sum_{m<=j} 2^{m-j} annulus_residual_m)"""
    if profile.annulus_residual is None:
        return None
    worst = None
    for j in range(len(profile.levels)):
        denom = 2.0 ** -j * profile.annulus_osc[0] + sum(
            2.0 ** (m - j) * profile.annulus_residual[m] for m in range(j + 1))
        if denom > 0:
            ratio = profile.annulus_osc[j] / denom
            worst = ratio if worst is None else max(worst, ratio)
    return worst


def poincare_ratio(op: Operator, u: GridFunction, region: Region, basis: NullspaceBasis,
                   measure: Optional[DiscreteMeasure] = None) -> Tuple[float, float, Optional[float]]:
    """lhs = sum_{l<k} r^l mean|nabla^l (u - Pi u)|, rhs = r^k |Au|(region) / |region|"""
    u.require_ball(region.center, region.radius)
    projection = project_l2(u, basis, region)
    flat, points, weights = grid_weights(u, region)
    volume = weights.sum()
    lhs = 0.0
    for ell in range(op.k):
        field = gradient_tensor(u, ell).flat_values()[flat]
        exact = projection.derivative_tensor(ell).evaluate(points)
        lhs += region.radius ** ell * float(weights @ np.linalg.norm(field - exact, axis=1) / volume)
    mu = variation_measure(op, u) if measure is None else measure
    rhs = region.radius ** op.k * mu.mass_in(region) / volume
    return lhs, rhs, (lhs / rhs if rhs > 0 else None)
