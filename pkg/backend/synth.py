"""
Analytic test functions sampled on a lattice, and seeded random suites.
"""
import logging
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from errors import InputParseError
from grid_function import GridFunction
from polynomials import Polynomial, monomials

logger = logging.getLogger(__name__)

KINDS = ("smooth", "indicator_halfplane", "indicator_halfdisk", "indicator_disk",
         "cone_abs", "polynomial", "mixture")


def _smooth(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    freq = float(params.get("frequency", 1.0))
    dim = int(params.get("dim", 1))

    def f(x):
        rest = np.prod(np.cos(freq * x[:, 1:]), axis=1)
        return np.stack([np.sin(freq * x[:, 0] + c) * rest for c in range(dim)], axis=1)
    return f


def _halfplane(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    axis = int(params.get("axis", 0))
    offset = float(params.get("offset", 0.0))
    return lambda x: (x[:, axis] > offset).astype(float)


def _halfdisk(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    radius = float(params.get("radius", 1.0))
    return lambda x: ((np.linalg.norm(x, axis=1) < radius) & (x[:, -1] > 0)).astype(float)


def _disk(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    radius = float(params.get("radius", 1.0))
    return lambda x: (np.linalg.norm(x, axis=1) < radius).astype(float)


def _cone(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    """|x|, or |x| * x_axis when `axis` is given"""
    axis = params.get("axis")

    def f(x):
        value = np.linalg.norm(x, axis=1)
        return value if axis is None else value * x[:, int(axis)]
    return f


def _polynomial(params: Dict[str, Any]) -> Callable[[np.ndarray], np.ndarray]:
    if "polynomial" not in params:
        raise InputParseError("kind 'polynomial' needs a 'polynomial' parameter")
    try:
        q = Polynomial.from_dict(params["polynomial"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputParseError(f"cannot parse polynomial parameter: {e}")
    return q.evaluate


def random_mixture(rng: np.random.Generator, n: int, jumps: int = 1) -> Callable[[np.ndarray], np.ndarray]:
    """a sin(f.x + phi) plus `jumps` half-space or disk indicators with random heights"""
    amp = rng.uniform(0.5, 1.5)
    freq = rng.normal(size=n) * 2.0
    phase = rng.uniform(0, 2 * np.pi)
    parts = []
    for _ in range(jumps):
        height = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
        if rng.random() < 0.5:
            normal = rng.normal(size=n)
            normal /= np.linalg.norm(normal)
            offset = rng.uniform(-0.5, 0.5)
            parts.append(lambda x, nu=normal, c=offset, a=height: a * (x @ nu > c))
        else:
            center = rng.uniform(-0.5, 0.5, size=n)
            radius = rng.uniform(0.3, 0.8)
            parts.append(lambda x, c=center, rad=radius, a=height:
                         a * (np.linalg.norm(x - c[None, :], axis=1) < rad))

    def f(x):
        value = amp * np.sin(x @ freq + phase)
        for part in parts:
            value = value + part(x)
        return value
    return f


def _mixture(params: Dict[str, Any], n: int) -> Callable[[np.ndarray], np.ndarray]:
    rng = np.random.default_rng(int(params.get("seed", 0)))
    return random_mixture(rng, n, int(params.get("jumps", 1)))


def synthesize_test_function(kind: str, lower: Sequence[float], upper: Sequence[float], h: float,
                             params: Optional[Dict[str, Any]] = None) -> GridFunction:
    """Sample the named prototype on the lattice of [lower, upper] with spacing h"""
    params = params or {}
    builders = {
        "smooth": _smooth,
        "indicator_halfplane": _halfplane,
        "indicator_halfdisk": _halfdisk,
        "indicator_disk": _disk,
        "cone_abs": _cone,
        "polynomial": _polynomial,
    }
    if kind == "mixture":
        f = _mixture(params, len(lower))
    elif kind in builders:
        f = builders[kind](params)
    else:
        raise InputParseError(f"unknown test function kind '{kind}' (known: {', '.join(KINDS)})")
    u = GridFunction.from_function(f, lower, upper, h)
    logger.info("synthesized %s on %s with h=%g", kind, list(u.shape), h)
    return u


def random_polynomial(rng: np.random.Generator, n: int, dim: int, degree: int,
                      vanish_at_origin: bool = False) -> Polynomial:
    """Gaussian coefficients; the constant term is dropped when vanish_at_origin"""
    coeffs = rng.normal(size=(len(monomials(n, degree)), dim))
    if vanish_at_origin:
        coeffs[0] = 0.0
    return Polynomial(n, dim, degree, coeffs)
