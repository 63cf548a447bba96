"""
Polynomial solution spaces K_d = {q : deg q <= d, A q = 0} and the
stabilized nullspace N(A).

Coefficient vectors are flattened monomial-major, component-minor, the
same layout as Polynomial.coeffs.reshape(-1).
"""
import logging
from dataclasses import dataclass, field
from math import ceil
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgError, cholesky, null_space, solve_triangular

from config import parallel_map
from errors import InputInvariantError, SingularGramError
from models import NullspaceReportModel, PolynomialModel
from operator_core import Operator
from polynomials import Polynomial, falling_factorial, monomial_index, monomials
from regions import Region, monomial_integral

logger = logging.getLogger(__name__)

KERNEL_RCOND = 1e-10


@dataclass(frozen=True)
class NullspaceBasis:
    degree: int
    basis: List[Polynomial]
    dims_by_degree: List[int]

    @property
    def dim(self) -> int:
        return len(self.basis)


@dataclass(frozen=True)
class StabilizationResult:
    stabilized: bool
    dims_by_degree: List[int]
    basis: Optional[NullspaceBasis] = None
    window: List[int] = field(default_factory=list)

    @property
    def degree(self) -> Optional[int]:
        return self.basis.degree if self.basis else None

    def to_model(self) -> NullspaceReportModel:
        return NullspaceReportModel(
            stabilized=self.stabilized,
            degree=self.degree,
            dims_by_degree=self.dims_by_degree,
            basis=[PolynomialModel(**q.to_dict()) for q in self.basis.basis] if self.basis else [],
        )


def assemble_operator_matrix(op: Operator, d: int) -> np.ndarray:
    """Matrix of q -> A q from degree-<=d V-valued to degree-<=(d-k) W-valued coefficients"""
    source = monomials(op.n, d)
    cols = len(source) * op.dim_v
    if d < op.k:
        return np.zeros((0, cols))
    target = monomial_index(op.n, d - op.k)
    matrix = np.zeros((len(target) * op.dim_w, cols))
    for b, beta in enumerate(source):
        for alpha, mat in op.terms.items():
            weight = falling_factorial(beta, alpha)
            if not weight:
                continue
            t = target[tuple(x - a for x, a in zip(beta, alpha))]
            matrix[t * op.dim_w:(t + 1) * op.dim_w, b * op.dim_v:(b + 1) * op.dim_v] += weight * mat
    return matrix


def kernel_dimension(op: Operator, d: int) -> int:
    matrix = assemble_operator_matrix(op, d)
    if matrix.shape[0] == 0:
        return matrix.shape[1]
    sv = np.linalg.svd(matrix, compute_uv=False)
    rank = int(np.sum(sv > KERNEL_RCOND * sv[0])) if sv.size and sv[0] > 0 else 0
    return matrix.shape[1] - rank


def nullspace_dims(op: Operator, d_max: int) -> List[int]:
    """dim K_0, ..., dim K_{d_max}"""
    return parallel_map(lambda d: kernel_dimension(op, d), range(d_max + 1))


def unit_ball_mass_matrix(n: int, d: int, dim: int) -> np.ndarray:
    """L2(B(0,1)) inner products of the flattened degree-<=d coefficient basis"""
    mons = monomials(n, d)
    scalar = np.empty((len(mons), len(mons)))
    ball = Region.ball(np.zeros(n), 1.0)
    for i, a in enumerate(mons):
        for j in range(i, len(mons)):
            value = monomial_integral(tuple(x + y for x, y in zip(a, mons[j])), ball)
            scalar[i, j] = scalar[j, i] = value
    return np.kron(scalar, np.eye(dim))


def _orthonormalize(columns: np.ndarray, n: int, d: int, dim: int) -> np.ndarray:
    if columns.shape[1] == 0:
        return columns
    gram = columns.T @ unit_ball_mass_matrix(n, d, dim) @ columns
    try:
        lower = cholesky(gram, lower=True)
    except LinAlgError:
        raise SingularGramError("kernel basis Gram matrix on B(0,1) is not positive definite")
    return solve_triangular(lower, columns.T, lower=True).T


def kernel_basis(op: Operator, d: int) -> NullspaceBasis:
    """Orthonormal (in L2(B(0,1))) basis of K_d"""
    if d < 0:
        raise InputInvariantError(f"degree bound must be nonnegative, got {d}")
    matrix = assemble_operator_matrix(op, d)
    if matrix.shape[0] == 0:
        columns = np.eye(matrix.shape[1])
    else:
        columns = null_space(matrix, rcond=KERNEL_RCOND)
    columns = _orthonormalize(columns, op.n, d, op.dim_v)
    size = len(monomials(op.n, d))
    basis = [Polynomial(op.n, op.dim_v, d, columns[:, i].reshape(size, op.dim_v))
             for i in range(columns.shape[1])]
    dims = nullspace_dims(op, d)
    attained = min(i for i, dim in enumerate(dims) if dim == dims[-1])
    logger.debug("K_%d of %r has dimension %d, attained at degree %d", d, op, len(basis), attained)
    return NullspaceBasis(degree=attained, basis=basis, dims_by_degree=dims)


def stabilization_window(d_max: int) -> List[int]:
    width = ceil(d_max / 2)
    return list(range(d_max - width, d_max + 1))


def stabilized_nullspace(op: Operator, d_max: int) -> StabilizationResult:
    """N(A) as K_m, m the first degree at which dim K_d reaches its final value"""
    if d_max < op.k + 2:
        raise InputInvariantError(f"d_max={d_max} must be at least k+2={op.k + 2}")
    dims = nullspace_dims(op, d_max)
    window = stabilization_window(d_max)
    if len({dims[d] for d in window}) != 1:
        logger.info("nullspace of %r does not stabilize up to degree %d: %s", op, d_max, dims)
        return StabilizationResult(stabilized=False, dims_by_degree=dims, window=window)
    m = min(i for i, dim in enumerate(dims) if dim == dims[-1])
    basis = kernel_basis(op, m)
    return StabilizationResult(
        stabilized=True,
        dims_by_degree=dims,
        basis=NullspaceBasis(degree=m, basis=basis.basis, dims_by_degree=dims),
        window=window,
    )
