"""
Real ellipticity and C-ellipticity of an operator through its symbol.

C-ellipticity can only be refuted by sampling, so a positive answer is
always reported as evidence and paired with the polynomial nullspace test.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import norm, qmc

from config import parallel_map
from errors import InputInvariantError
from models import CertificateModel, EllipticityReportModel
from operator_core import Operator, ensure_valid, symbol_batch
from poly_nullspace import nullspace_dims, stabilization_window

logger = logging.getLogger(__name__)

CERTIFICATE_TOL = 1e-8
DEFAULT_RESTARTS = 32
DEFAULT_GRID_DEPTH = 4
SPHERE_SAMPLES_PER_DIM = 128
PATTERN_START_STEP = 0.25
PATTERN_MIN_STEP = 1e-13
PATTERN_MAX_SWEEPS = 4000


@dataclass(frozen=True)
class Certificate:
    xi: np.ndarray
    v: np.ndarray
    residual: float

    def to_model(self) -> CertificateModel:
        return CertificateModel(
            xi_real=self.xi.real.tolist(), xi_imag=self.xi.imag.tolist(),
            v_real=self.v.real.tolist(), v_imag=self.v.imag.tolist(),
            residual=self.residual,
        )


@dataclass(frozen=True)
class EllipticityReport:
    real_margin: float
    c_elliptic_verdict: str
    certificate: Optional[Certificate]
    nullspace_dims: List[int]
    symbol_minimum: float
    stabilized: bool
    evidence: List[str] = field(default_factory=list)

    def to_model(self) -> EllipticityReportModel:
        return EllipticityReportModel(
            real_margin=self.real_margin,
            c_elliptic_verdict=self.c_elliptic_verdict,
            certificate=self.certificate.to_model() if self.certificate else None,
            nullspace_dims=self.nullspace_dims,
            symbol_minimum=self.symbol_minimum,
            stabilized=self.stabilized,
            evidence=self.evidence,
        )


def sigma_min_batch(op: Operator, xis: np.ndarray) -> np.ndarray:
    """Smallest singular value of A[xi] per row of xis; 0 when dim_w < dim_v"""
    xis = np.atleast_2d(xis)
    if op.dim_w < op.dim_v:
        return np.zeros(xis.shape[0])
    return np.linalg.svd(symbol_batch(op, xis), compute_uv=False)[:, -1]


def _sphere_points(dim: int, count: int, seed: int) -> np.ndarray:
    """Quasi-uniform points on S^{dim-1}: scrambled Halton pushed through the normal quantile"""
    sample = qmc.Halton(d=dim, scramble=True, seed=seed).random(count)
    points = norm.ppf(np.clip(sample, 1e-12, 1 - 1e-12))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def real_ellipticity_margin(op: Operator, grid_depth: int = DEFAULT_GRID_DEPTH, seed: int = 0) -> float:
    """min of sigma_min(A[xi]) over a refined sample of the real unit sphere"""
    if grid_depth < 1:
        raise InputInvariantError(f"grid_depth must be at least 1, got {grid_depth}")
    axes = np.eye(op.n)
    points = np.concatenate([axes, -axes, _sphere_points(op.n, SPHERE_SAMPLES_PER_DIM * op.n, seed)])
    values = sigma_min_batch(op, points)
    best = int(np.argmin(values))
    xi, margin = points[best], float(values[best])
    local = _sphere_points(op.n, SPHERE_SAMPLES_PER_DIM, seed + 1)
    for depth in range(1, grid_depth + 1):
        cap = 0.5 / 4 ** depth
        candidates = xi[None, :] + cap * local
        candidates /= np.linalg.norm(candidates, axis=1, keepdims=True)
        values = sigma_min_batch(op, candidates)
        i = int(np.argmin(values))
        if values[i] < margin:
            xi, margin = candidates[i], float(values[i])
    logger.debug("real margin %.3e at xi=%s", margin, np.round(xi, 6).tolist())
    return max(margin, 0.0)


def _complex_frequency(p: np.ndarray) -> np.ndarray:
    n = p.shape[0] // 2
    return (p[:n] + 1j * p[n:]) / np.linalg.norm(p)


def _pattern_search(op: Operator, start: np.ndarray, tol: float) -> Tuple[float, np.ndarray]:
    """Coordinate pattern search of sigma_min over xi = a + ib, |a|^2 + |b|^2 = 1"""
    p = start / np.linalg.norm(start)
    value = float(sigma_min_batch(op, _complex_frequency(p))[0])
    step = PATTERN_START_STEP
    directions = np.concatenate([np.eye(p.shape[0]), -np.eye(p.shape[0])])
    for _ in range(PATTERN_MAX_SWEEPS):
        if step < PATTERN_MIN_STEP or value < tol * 1e-3:
            break
        trials = p[None, :] + step * directions
        trials /= np.linalg.norm(trials, axis=1, keepdims=True)
        n = op.n
        values = sigma_min_batch(op, (trials[:, :n] + 1j * trials[:, n:]))
        i = int(np.argmin(values))
        if values[i] < value:
            p, value = trials[i], float(values[i])
        else:
            step /= 2
    return value, p


def _certificate(op: Operator, xi: np.ndarray) -> Certificate:
    j = int(np.argmax(np.abs(xi)))
    xi = xi * np.exp(-1j * np.angle(xi[j]))
    xi = xi / np.linalg.norm(xi)
    matrix = symbol_batch(op, xi[None, :])[0]
    _, _, vh = np.linalg.svd(matrix, full_matrices=True)
    v = np.conj(vh[-1])
    residual = float(np.linalg.norm(matrix @ v))
    return Certificate(xi=xi, v=v, residual=residual)


def symbol_search(op: Operator, restarts: int = DEFAULT_RESTARTS, tol: float = CERTIFICATE_TOL,
                  seed: int = 0) -> Tuple[float, Certificate]:
    """Multi-start minimization of sigma_min over the complex unit sphere"""
    seeds = norm.ppf(np.clip(qmc.Halton(d=2 * op.n, scramble=True, seed=seed).random(restarts),
                             1e-12, 1 - 1e-12))
    results = parallel_map(lambda s: _pattern_search(op, s, tol), list(seeds))
    for i, (value, _) in enumerate(results):
        logger.debug("restart %d: sigma_min %.3e", i, value)
    value, p = min(results, key=lambda r: r[0])
    return value, _certificate(op, _complex_frequency(p))


def c_ellipticity_classify(op: Operator, d_max: Optional[int] = None, restarts: int = DEFAULT_RESTARTS,
                           tol: float = CERTIFICATE_TOL, seed: int = 0,
                           grid_depth: int = DEFAULT_GRID_DEPTH) -> EllipticityReport:
    """Symbol search and nullspace stabilization, combined into one verdict"""
    ensure_valid(op)
    d_max = max(8, op.k + 2) if d_max is None else d_max
    if d_max < op.k + 2:
        raise InputInvariantError(f"d_max={d_max} must be at least k+2={op.k + 2}")
    if restarts < 1:
        raise InputInvariantError(f"restarts must be positive, got {restarts}")

    margin = real_ellipticity_margin(op, grid_depth, seed)
    minimum, certificate = symbol_search(op, restarts, tol, seed)
    dims = nullspace_dims(op, d_max)
    window = stabilization_window(d_max)
    stabilized = len({dims[d] for d in window}) == 1
    growth = dims[d_max] > dims[d_max - 1]

    if growth and minimum >= tol:
        # growing kernel: a complex null direction exists
        minimum_retry, certificate_retry = symbol_search(op, 4 * restarts, tol, seed + 1)
        if minimum_retry < minimum:
            minimum, certificate = minimum_retry, certificate_retry

    evidence = []
    if minimum < tol:
        evidence.append("symbol_kernel")
    if growth:
        evidence.append("nullspace_growth")
    if stabilized:
        evidence.append("nullspace_stabilized")
    if margin <= tol:
        evidence.append("real_degeneracy")

    if minimum < tol:
        verdict = "not_c_elliptic"
    elif growth:
        verdict = "not_c_elliptic"
        certificate = None
    elif stabilized:
        verdict = "c_elliptic_evidence"
        certificate = None
    else:
        verdict = "inconclusive"
        certificate = None
        logger.warning("classification of %r is inconclusive: dims %s, symbol minimum %.3e", op, dims, minimum)

    logger.info("%r: %s (symbol minimum %.3e, dims %s)", op, verdict, minimum, dims)
    return EllipticityReport(
        real_margin=margin,
        c_elliptic_verdict=verdict,
        certificate=certificate,
        nullspace_dims=dims,
        symbol_minimum=minimum,
        stabilized=stabilized,
        evidence=evidence,
    )
