"""
Homogeneous constant-coefficient differential operators

    A u = sum_{|alpha| = k} A_alpha d^alpha u,    A_alpha : R^dim_v -> R^dim_w,

their Fourier symbols A[xi] = sum xi^alpha A_alpha (real or complex xi) and
their exact action on polynomials.
"""
import json
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from errors import DimensionMismatchError, InputParseError, OperatorError
from models import OperatorFile, TermModel, ValidationReport
from polynomials import (MultiIndex, Polynomial, falling_factorial, monomial_index,
                         monomials, order)

logger = logging.getLogger(__name__)


class Operator:
    """Coefficient data of A; immutable once built"""

    def __init__(self, n: int, k: int, dim_v: int, dim_w: int,
                 terms: Dict[Sequence[int], Sequence[Sequence[float]]]):
        self.n = int(n)
        self.k = int(k)
        self.dim_v = int(dim_v)
        self.dim_w = int(dim_w)
        cleaned = {}
        for alpha, matrix in terms.items():
            alpha = tuple(int(a) for a in alpha)
            matrix = np.array(matrix, dtype=float)
            if matrix.ndim == 1:
                matrix = matrix.reshape(-1, 1) if self.dim_v == 1 else matrix.reshape(1, -1)
            matrix.setflags(write=False)
            if alpha in cleaned:
                matrix = cleaned[alpha] + matrix
                matrix.setflags(write=False)
            cleaned[alpha] = matrix
        self.terms: Dict[MultiIndex, np.ndarray] = dict(sorted(cleaned.items(), reverse=True))

    @property
    def alphas(self) -> List[MultiIndex]:
        return list(self.terms)

    def _stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        alphas = np.array(self.alphas, dtype=int).reshape(-1, self.n)
        mats = np.stack(list(self.terms.values())) if self.terms else np.zeros((0, self.dim_w, self.dim_v))
        return alphas, mats

    def transformed(self, left: np.ndarray, right: np.ndarray) -> "Operator":
        """Operator with coefficients left @ A_alpha @ right"""
        left = np.asarray(left, dtype=float)
        right = np.asarray(right, dtype=float)
        terms = {alpha: left @ mat @ right for alpha, mat in self.terms.items()}
        return Operator(self.n, self.k, right.shape[0], left.shape[0], terms)

    def to_model(self) -> OperatorFile:
        return OperatorFile(
            n=self.n, k=self.k, dim_v=self.dim_v, dim_w=self.dim_w,
            terms=[TermModel(alpha=list(alpha), matrix=mat.tolist())
                   for alpha, mat in self.terms.items()],
        )

    @classmethod
    def from_model(cls, model: OperatorFile) -> "Operator":
        return cls(model.n, model.k, model.dim_v, model.dim_w,
                   {tuple(t.alpha): t.matrix for t in model.terms})

    def to_json(self) -> str:
        return json.dumps(self.to_model().model_dump(mode="json"), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Operator":
        try:
            return cls.from_model(OperatorFile.model_validate_json(text))
        except (ValidationError, ValueError) as e:
            raise InputParseError(f"cannot parse operator definition: {e}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Operator):
            return NotImplemented
        return ((self.n, self.k, self.dim_v, self.dim_w) == (other.n, other.k, other.dim_v, other.dim_w)
                and self.terms.keys() == other.terms.keys()
                and all(np.array_equal(self.terms[a], other.terms[a]) for a in self.terms))

    def __repr__(self) -> str:
        return f"Operator(n={self.n}, k={self.k}, dim_v={self.dim_v}, dim_w={self.dim_w}, terms={len(self.terms)})"


@dataclass(frozen=True)
class SymbolValue:
    frequency: np.ndarray
    matrix: np.ndarray


def validate(op: Operator) -> ValidationReport:
    """Report every violated Operator invariant; never raises"""
    violations = []
    if op.n < 2:
        violations.append(f"dimension n={op.n} is below 2")
    if op.k < 1:
        violations.append(f"order k={op.k} is below 1")
    if not op.terms:
        violations.append("operator has no terms")
    nonzero = False
    for alpha, mat in op.terms.items():
        if len(alpha) != op.n:
            violations.append(f"multi-index {list(alpha)} has length {len(alpha)}, expected n={op.n}")
            continue
        if any(a < 0 for a in alpha):
            violations.append(f"multi-index {list(alpha)} has negative entries")
        if order(alpha) != op.k:
            violations.append(f"non-homogeneous term {list(alpha)}: |alpha|={order(alpha)} but k={op.k}")
        if mat.shape != (op.dim_w, op.dim_v):
            violations.append(f"matrix for {list(alpha)} has shape {list(mat.shape)}, expected [{op.dim_w}, {op.dim_v}]")
            continue
        if not np.all(np.isfinite(mat)):
            violations.append(f"matrix for {list(alpha)} has non-finite entries")
        elif np.any(mat != 0):
            nonzero = True
    if op.terms and not nonzero:
        violations.append("zero operator: every coefficient matrix vanishes")
    return ValidationReport(ok=not violations, violations=violations)


def ensure_valid(op: Operator) -> Operator:
    report = validate(op)
    if not report.ok:
        logger.warning("rejected operator %r: %s", op, "; ".join(report.violations))
        raise OperatorError(report.violations)
    return op


def symbol_batch(op: Operator, xis: np.ndarray) -> np.ndarray:
    """A[xi] for a batch of frequencies, shape (N, dim_w, dim_v), complex"""
    xis = np.atleast_2d(np.asarray(xis, dtype=complex))
    if xis.shape[1] != op.n:
        raise DimensionMismatchError(f"frequency has length {xis.shape[1]}, expected n={op.n}")
    alphas, mats = op._stacked()
    powers = np.prod(xis[:, None, :] ** alphas[None, :, :], axis=2)
    return np.einsum("nt,twv->nwv", powers, mats.astype(complex))


def symbol(op: Operator, xi: Sequence[complex]) -> SymbolValue:
    xi = np.asarray(xi, dtype=complex).reshape(-1)
    if xi.shape[0] != op.n:
        raise DimensionMismatchError(f"frequency has length {xi.shape[0]}, expected n={op.n}")
    matrix = symbol_batch(op, xi[None, :])[0]
    if not np.any(xi.imag):
        matrix = matrix.real + 0j
    return SymbolValue(frequency=xi, matrix=matrix)


def apply_to_polynomial(op: Operator, q: Polynomial) -> Polynomial:
    """A q computed exactly on coefficients; degree bound drops by k"""
    if q.dim != op.dim_v:
        raise DimensionMismatchError(f"polynomial is {q.dim}-valued, operator expects dim_v={op.dim_v}")
    if q.n != op.n:
        raise DimensionMismatchError(f"polynomial has {q.n} variables, operator expects n={op.n}")
    out_degree = q.degree - op.k
    if out_degree < 0:
        return Polynomial.zero(op.n, op.dim_w)
    index = monomial_index(op.n, out_degree)
    coeffs = np.zeros((len(index), op.dim_w))
    for i, beta in enumerate(monomials(op.n, q.degree)):
        c = q.coeffs[i]
        if not np.any(c):
            continue
        for alpha, mat in op.terms.items():
            weight = falling_factorial(beta, alpha)
            if weight:
                target = tuple(b - a for b, a in zip(beta, alpha))
                coeffs[index[target]] += weight * (mat @ c)
    return Polynomial(op.n, op.dim_w, out_degree, coeffs)
