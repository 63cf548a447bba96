"""
Pointwise behaviour of grid functions of bounded A-variation: the Riesz
potential Lebesgue-point test across a resolution ladder, the continuity
estimates for k = n and k > n, and the local L-infinity bound.
"""
import csv
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import parallel_map
from errors import InputInvariantError, LadderError, OrderMismatchError
from grid_calculus import dyadic_profile, variation_measure
from grid_function import GridFunction, gradient_tensor
from measures import DiscreteMeasure, Potential, fractional_maximal, restrict, riesz_potential
from models import (ContinuityPairModel, ContinuityReportModel, LinftyReportModel,
                    PointVerdictModel)
from operator_core import Operator
from poly_nullspace import stabilized_nullspace
from regions import Region, grid_weights

logger = logging.getLogger(__name__)

EPS_SLOPE = 0.2
MIN_RUNGS = 3
RADIUS_FACTORS = (1.0, 0.5, 0.25)
CAUCHY_TOL = 1e-2
OSC_FLOOR = 1e-2
OSC_DECAY = 0.25
PAIR_FRACTIONS = (0.25, 0.125, 0.0625)
PAIR_DIRECTIONS = 8


@dataclass(frozen=True)
class PointVerdict:
    x0: np.ndarray
    predicted: str
    means_cauchy: bool
    osc_vanishing: bool
    potential_trend: Optional[float]
    radius_slopes: Dict[float, Optional[float]]
    potentials: List[Potential]
    maximal_values: List[float]
    osc_last: float

    @property
    def maximal_value(self) -> float:
        return self.maximal_values[-1]

    @property
    def consistent(self) -> bool:
        return self.predicted != "lebesgue" or self.means_cauchy

    def to_model(self) -> PointVerdictModel:
        def finite(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return PointVerdictModel(
            x0=self.x0.tolist(),
            predicted=self.predicted,
            means_cauchy=self.means_cauchy,
            osc_vanishing=self.osc_vanishing,
            consistent=self.consistent,
            potential_trend=finite(self.potential_trend),
            radius_slopes={f"{r:g}": finite(v) for r, v in self.radius_slopes.items()},
            potentials=[p.to_model() for p in self.potentials],
            maximal_value=self.maximal_value,
            maximal_values=self.maximal_values,
            osc_last=self.osc_last,
        )


def check_ladder(ladder: Sequence[GridFunction]) -> None:
    """Rungs must share one box and halve h from one rung to the next"""
    if not ladder:
        raise LadderError("resolution ladder is empty")
    for coarse, fine in zip(ladder, ladder[1:]):
        if not coarse.same_box(fine):
            raise LadderError("ladder rungs cover different boxes")
        if abs(fine.h * 2 - coarse.h) > 1e-9 * coarse.h:
            raise LadderError(f"ladder is not nested: h={coarse.h} is followed by h={fine.h}")
        if (coarse.n, coarse.dim) != (fine.n, fine.dim):
            raise LadderError("ladder rungs have different dimensions")


def trend_slope(hs: Sequence[float], potentials: Sequence[Potential]) -> Optional[float]:
    """Least-squares slope of the potential against log(1/h); inf if any rung is infinite"""
    if len(hs) < MIN_RUNGS:
        return None
    if any(p.infinite for p in potentials):
        return float("inf")
    slope, _ = np.polyfit(np.log(1.0 / np.asarray(hs)), [p.value for p in potentials], 1)
    return float(slope)


def _maximal_radii(r: float, h: float) -> List[float]:
    radii = []
    rho = r
    while rho >= h:
        radii.append(rho)
        rho /= 2
    return radii


def _radius_factors(factors: Sequence[float]) -> List[float]:
    """Tested radii as fractions of r, largest first; r itself is always tested"""
    factors = [float(t) for t in factors]
    if any(not 0 < t <= 1 for t in factors):
        raise InputInvariantError(f"radius factors must lie in (0, 1], got {factors}")
    return sorted(set(factors) | {1.0}, reverse=True)


def _scan_point(op: Operator, ladder: Sequence[GridFunction], measures: Sequence[DiscreteMeasure],
                x0: np.ndarray, r: float, j_max: int, basis, eps_slope: float,
                factors: Sequence[float]) -> PointVerdict:
    hs = [u.h for u in ladder]
    s = float(op.k)
    slopes = {}
    base_potentials = None
    for factor in factors:
        rho = r * factor
        potentials = [riesz_potential(restrict(mu, Region.ball(x0, rho)), s, x0) for mu in measures]
        slopes[rho] = trend_slope(hs, potentials)
        if factor == 1.0:
            base_potentials = potentials
    maximal = [fractional_maximal(restrict(mu, Region.ball(x0, r)), op.k, x0, _maximal_radii(r, u.h))
               for mu, u in zip(measures, ladder)]

    finest = ladder[-1]
    profile = dyadic_profile(finest, op, x0, r, j_max, basis=basis, measure=measures[-1])
    increment = float(np.linalg.norm(profile.mean[-1] - profile.mean[-2])) if len(profile.mean) > 1 else 0.0
    means_cauchy = increment < CAUCHY_TOL
    osc_last = profile.osc[-1]
    osc_vanishing = osc_last <= max(OSC_FLOOR, OSC_DECAY * profile.osc[0])

    values = list(slopes.values())
    if any(v is None for v in values):
        predicted = "undetermined"
    elif all(v >= eps_slope for v in values):
        predicted = "sigma_candidate"
    elif all(v < eps_slope for v in values):
        predicted = "lebesgue"
    else:
        # radii disagree: neither bounded at r nor divergent at every radius
        predicted = "undetermined"
    verdict = PointVerdict(
        x0=x0, predicted=predicted, means_cauchy=means_cauchy, osc_vanishing=osc_vanishing,
        potential_trend=slopes[r], radius_slopes=slopes, potentials=base_potentials,
        maximal_values=maximal, osc_last=osc_last,
    )
    if not verdict.consistent:
        logger.warning("point %s: bounded potential trend but means are not Cauchy", x0.tolist())
    return verdict


def lebesgue_scan(op: Operator, ladder: Sequence[GridFunction], query_points: Sequence[Sequence[float]],
                  r: float, j_max: int, eps_slope: float = EPS_SLOPE,
                  radius_factors: Sequence[float] = RADIUS_FACTORS) -> List[PointVerdict]:
    """One PointVerdict per query point, in input order; radii r*t for t in radius_factors"""
    factors = _radius_factors(radius_factors)
    ladder = list(ladder)
    check_ladder(ladder)
    points = [np.asarray(x, dtype=float).reshape(-1) for x in query_points]
    for x0 in points:
        for u in ladder:
            u.require_ball(x0, r)
    measures = []
    for u in ladder:
        measures.append(variation_measure(op, u))
        logger.info("variation measure on rung h=%g: %d cells, mass %.6g",
                    u.h, len(measures[-1].cell_points), measures[-1].total_variation())
    result = stabilized_nullspace(op, max(8, op.k + 2))
    return parallel_map(lambda x0: _scan_point(op, ladder, measures, x0, r, j_max, result.basis, eps_slope, factors),
                        points)


def verdicts_to_csv(verdicts: Sequence[PointVerdict], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x0", "slope", "osc_last", "verdict"])
        for v in verdicts:
            slope = "" if v.potential_trend is None else repr(float(v.potential_trend))
            writer.writerow([" ".join(repr(float(c)) for c in v.x0), slope, repr(float(v.osc_last)), v.predicted])


def radial_pairs(centers: Sequence[Sequence[float]], r: float,
                 fractions: Sequence[float] = PAIR_FRACTIONS,
                 directions: int = PAIR_DIRECTIONS) -> List[Tuple[np.ndarray, np.ndarray]]:
    """y = x + t e for t in fractions * r and equally spaced unit directions in the first coordinate plane"""
    pairs = []
    for x in centers:
        x = np.asarray(x, dtype=float).reshape(-1)
        for t in fractions:
            for d in range(directions):
                theta = 2 * np.pi * d / directions
                e = np.zeros_like(x)
                e[0], e[1] = np.cos(theta), np.sin(theta)
                pairs.append((x, x + t * r * e))
    return pairs


@dataclass
class ContinuityReport:
    radius: float
    derivative_order: int
    pairs: List[ContinuityPairModel] = field(default_factory=list)

    @property
    def suite_constant(self) -> float:
        ratios = [p.ratio for p in self.pairs if p.ratio is not None]
        return max(ratios, default=0.0)

    @property
    def modulus(self) -> Dict[float, float]:
        """max lhs per pair distance, largest distance first"""
        out: Dict[float, float] = {}
        for p in self.pairs:
            key = round(p.distance / self.radius, 12)
            out[key] = max(out.get(key, 0.0), p.lhs)
        return dict(sorted(out.items(), reverse=True))

    @property
    def monotone(self) -> bool:
        values = list(self.modulus.values())
        return all(b <= a * (1 + 1e-9) + 1e-14 for a, b in zip(values, values[1:]))

    def to_model(self) -> ContinuityReportModel:
        return ContinuityReportModel(
            radius=self.radius,
            derivative_order=self.derivative_order,
            pairs=self.pairs,
            suite_constant=self.suite_constant,
            modulus={f"{t:g}": v for t, v in self.modulus.items()},
            monotone=self.monotone,
        )


def _punctured_mass(mu: DiscreteMeasure, x: np.ndarray, r: float) -> float:
    """|mu|(B(x, r) minus the cell containing x)"""
    local = restrict(mu, Region.ball(x, r))
    mass = local.total_variation()
    if len(local.cell_points):
        sup = np.max(np.abs(local.cell_points - x[None, :]), axis=1)
        i = int(np.argmin(sup))
        if sup[i] <= local.h / 2 * (1 + 1e-12):
            mass -= float(local.cell_norms[i])
    return max(mass, 0.0)


def _continuity(op: Operator, u: GridFunction, field_fn: GridFunction, order: int, r: float,
                pairs: Sequence[Tuple[Sequence[float], Sequence[float]]]) -> ContinuityReport:
    mu = variation_measure(op, u)
    report = ContinuityReport(radius=float(r), derivative_order=order)
    cache = {}
    for x, y in pairs:
        x = np.asarray(x, dtype=float).reshape(-1)
        y = np.asarray(y, dtype=float).reshape(-1)
        distance = float(np.linalg.norm(x - y))
        if distance >= r / 2:
            raise InputInvariantError(f"pair distance {distance} is not below r/2={r / 2}")
        key = tuple(x)
        if key not in cache:
            u.require_ball(x, r)
            ball = Region.ball(x, r)
            flat, _, w = grid_weights(field_fn, ball)
            values = field_fn.flat_values()[flat]
            mean = w @ values / w.sum()
            osc = float(w @ np.linalg.norm(values - mean[None, :], axis=1) / w.sum())
            cache[key] = (_punctured_mass(mu, x, r), osc)
        variation, osc = cache[key]
        fx, fy = field_fn.sample(np.stack([x, y]))
        lhs = float(np.linalg.norm(fx - fy))
        oscillation_term = distance / r * osc
        denom = variation + oscillation_term
        report.pairs.append(ContinuityPairModel(
            x=x.tolist(), y=y.tolist(), distance=distance, lhs=lhs,
            variation_term=variation, oscillation_term=oscillation_term,
            ratio=lhs / denom if denom > 0 else None,
        ))
    logger.info("continuity check (order %d): suite constant %.4g over %d pairs",
                order, report.suite_constant, len(report.pairs))
    return report


def continuity_check_k_eq_n(op: Operator, u: GridFunction, r: float,
                            pairs: Optional[Sequence[Tuple[Sequence[float], Sequence[float]]]] = None,
                            centers: Optional[Sequence[Sequence[float]]] = None) -> ContinuityReport:
    """|u(x) - u(y)| against |Au|(B(x,r) minus {x}) + (|x-y|/r) mean_B |u - <u>_B|"""
    if op.k != op.n:
        raise OrderMismatchError(f"continuity check needs k = n, got k={op.k}, n={op.n}")
    if pairs is None:
        pairs = radial_pairs(centers if centers is not None else [(u.lower + u.upper) / 2], r)
    return _continuity(op, u, u, 0, r, pairs)


def gradient_continuity_check_k_gt_n(op: Operator, u: GridFunction, r: float,
                                     pairs: Optional[Sequence[Tuple[Sequence[float], Sequence[float]]]] = None,
                                     centers: Optional[Sequence[Sequence[float]]] = None) -> ContinuityReport:
    """Same estimate for nabla^{k-n} u"""
    if op.k <= op.n:
        raise OrderMismatchError(f"gradient continuity check needs k > n, got k={op.k}, n={op.n}")
    if pairs is None:
        pairs = radial_pairs(centers if centers is not None else [(u.lower + u.upper) / 2], r)
    order = op.k - op.n
    return _continuity(op, u, gradient_tensor(u, order), order, r, pairs)


@dataclass(frozen=True)
class LinftyReport:
    center: np.ndarray
    radius: float
    derivative_order: int
    lhs: float
    mean_term: float
    variation_term: float

    @property
    def ratio(self) -> Optional[float]:
        denom = self.mean_term + self.variation_term
        return self.lhs / denom if denom > 0 else None

    def to_model(self) -> LinftyReportModel:
        return LinftyReportModel(center=self.center.tolist(), radius=self.radius,
                                 derivative_order=self.derivative_order, lhs=self.lhs,
                                 mean_term=self.mean_term, variation_term=self.variation_term,
                                 ratio=self.ratio)


def linfty_bound_check(op: Operator, u: GridFunction, ball: Region) -> LinftyReport:
    """max_B |nabla^{k-n} u| against mean_B |nabla^{k-n} u| and |Au|(B)"""
    if op.k < op.n:
        raise OrderMismatchError(f"L-infinity bound needs k >= n, got k={op.k}, n={op.n}")
    u.require_ball(ball.center, ball.radius)
    order = op.k - op.n
    v = gradient_tensor(u, order)
    flat, points, w = grid_weights(v, ball)
    norms = np.linalg.norm(v.flat_values()[flat], axis=1)
    inside = ball.contains(points, closed=True)
    lhs = float(norms[inside].max()) if np.any(inside) else float(norms.max())
    mean_term = float(w @ norms / w.sum())
    variation = restrict(variation_measure(op, u), ball).total_variation()
    return LinftyReport(center=ball.center, radius=ball.radius, derivative_order=order,
                        lhs=lhs, mean_term=mean_term, variation_term=variation)
