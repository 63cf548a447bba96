"""
Built-in operators, each generated for a given space dimension n.

Symmetric-matrix codomains use the coordinates (e_11, ..., e_nn, sqrt2*e_12, sqrt2*e_13, ...)
so the Euclidean norm on W is the Frobenius norm. Higher gradients use one
unweighted coordinate per multi-index |alpha| = k in graded-lex order.
"""
import itertools
from math import sqrt
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from errors import InputParseError
from operator_core import Operator
from polynomials import homogeneous_indices


def _unit(n: int, i: int, times: int = 1) -> Tuple[int, ...]:
    return tuple(times if j == i else 0 for j in range(n))


def _symmetric_rows(n: int) -> List[Tuple[int, int]]:
    return [(i, i) for i in range(n)] + list(itertools.combinations(range(n), 2))


def gradient(n: int) -> Operator:
    terms = {}
    for i in range(n):
        mat = np.zeros((n, 1))
        mat[i, 0] = 1.0
        terms[_unit(n, i)] = mat
    return Operator(n, 1, 1, n, terms)


def _symmetric_gradient(n: int, trace_free: bool) -> Operator:
    rows = _symmetric_rows(n)
    terms = {_unit(n, l): np.zeros((len(rows), n)) for l in range(n)}
    for r, (i, j) in enumerate(rows):
        if i == j:
            terms[_unit(n, i)][r, i] += 1.0
            if trace_free:
                for l in range(n):
                    terms[_unit(n, l)][r, l] -= 1.0 / n
        else:
            # sqrt2 * (d_i u_j + d_j u_i) / 2
            terms[_unit(n, i)][r, j] += 1.0 / sqrt(2.0)
            terms[_unit(n, j)][r, i] += 1.0 / sqrt(2.0)
    return Operator(n, 1, n, len(rows), terms)


def symmetric_gradient(n: int) -> Operator:
    return _symmetric_gradient(n, trace_free=False)


def tracefree_symmetric_gradient(n: int) -> Operator:
    return _symmetric_gradient(n, trace_free=True)


def higher_gradient(n: int, k: int) -> Operator:
    """D^k on scalar functions, one W-coordinate per d^alpha"""
    alphas = homogeneous_indices(n, k)
    terms = {}
    for r, alpha in enumerate(alphas):
        mat = np.zeros((len(alphas), 1))
        mat[r, 0] = 1.0
        terms[alpha] = mat
    return Operator(n, k, 1, len(alphas), terms)


def hessian(n: int) -> Operator:
    return higher_gradient(n, 2)


def laplacian_scalar(n: int) -> Operator:
    return Operator(n, 2, 1, 1, {_unit(n, i, 2): [[1.0]] for i in range(n)})


def cauchy_riemann(n: int) -> Operator:
    """(d1 u1 - d2 u2, d2 u1 + d1 u2); only defined in the plane"""
    if n != 2:
        raise InputParseError(f"cauchy_riemann is only defined for n=2, got n={n}")
    return Operator(2, 1, 2, 2, {
        (1, 0): [[1.0, 0.0], [0.0, 1.0]],
        (0, 1): [[0.0, -1.0], [1.0, 0.0]],
    })


def partial(n: int, axis: int = 0) -> Operator:
    """A single first-order partial derivative; elliptic only for n=1"""
    return Operator(n, 1, 1, 1, {_unit(n, axis): [[1.0]]})


ZOO: Dict[str, Callable[..., Operator]] = {
    "gradient": gradient,
    "symmetric_gradient": symmetric_gradient,
    "tracefree_symmetric_gradient": tracefree_symmetric_gradient,
    "hessian": hessian,
    "higher_gradient": higher_gradient,
    "laplacian_scalar": laplacian_scalar,
    "cauchy_riemann": cauchy_riemann,
    "partial": partial,
}


def zoo_operator(name: str, n: int = 2, order: Optional[int] = None) -> Operator:
    """Resolve `name` or `zoo:name`; `order` only applies to higher_gradient"""
    if name.startswith("zoo:"):
        name = name[len("zoo:"):]
    if name not in ZOO:
        raise InputParseError(f"unknown zoo operator '{name}' (known: {', '.join(sorted(ZOO))})")
    if name == "higher_gradient":
        return higher_gradient(n, order or 2)
    return ZOO[name](n)
