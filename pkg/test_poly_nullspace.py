from math import comb

import numpy as np
import pytest

from errors import InputInvariantError
from operator_core import apply_to_polynomial
from poly_nullspace import assemble_operator_matrix, kernel_basis, nullspace_dims, stabilized_nullspace
from polynomials import Polynomial, basis_coefficients, monomials
from regions import Region, region_quadrature
from zoo import ZOO, gradient, hessian, symmetric_gradient, tracefree_symmetric_gradient, zoo_operator


def _matrix_by_application(op, d):
    """Same matrix, column by column through apply_to_polynomial"""
    size = len(monomials(op.n, d))
    cols = []
    for i in range(size * op.dim_v):
        coeffs = np.zeros(size * op.dim_v)
        coeffs[i] = 1.0
        q = Polynomial(op.n, op.dim_v, d, coeffs.reshape(size, op.dim_v))
        out = apply_to_polynomial(op, q)
        cols.append(out.coeffs.reshape(-1))
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("op", [gradient(2), symmetric_gradient(2), hessian(2), tracefree_symmetric_gradient(3)])
def test_assembly_matches_application(op):
    d = op.k + 2
    assert np.array_equal(assemble_operator_matrix(op, d), _matrix_by_application(op, d))


def test_gradient_kernel_is_constants():
    basis = kernel_basis(gradient(2), 3)
    assert basis.dims_by_degree == [1, 1, 1, 1]
    assert basis.dim == 1
    assert basis.degree == 0


def test_symmetric_gradient_rigid_motions():
    op = symmetric_gradient(2)
    basis = kernel_basis(op, 2)
    assert basis.dim == 3
    rigid = [
        Polynomial.from_terms(2, 2, {(0, 0): [1.0, 0.0]}, 2),
        Polynomial.from_terms(2, 2, {(0, 0): [0.0, 1.0]}, 2),
        Polynomial.from_terms(2, 2, {(0, 1): [-1.0, 0.0], (1, 0): [0.0, 1.0]}, 2),
    ]
    for q in rigid:
        assert apply_to_polynomial(op, q).is_zero(1e-14)
    span = basis_coefficients(basis.basis, 2)
    target = basis_coefficients(rigid, 2)
    coeffs, *_ = np.linalg.lstsq(span, target, rcond=None)
    assert np.allclose(span @ coeffs, target, atol=1e-10)


def test_hessian_kernel_is_affine():
    basis = kernel_basis(hessian(2), 4)
    assert basis.dim == 3
    assert basis.degree == 1


def test_kernel_membership_and_orthonormality(rng):
    for op in (symmetric_gradient(2), hessian(2), symmetric_gradient(3)):
        basis = kernel_basis(op, op.k + 2)
        points = rng.uniform(-1, 1, size=(200, op.n))
        for q in basis.basis:
            out = apply_to_polynomial(op, q)
            assert np.max(np.abs(out.coeffs), initial=0.0) <= 1e-10 * q.coefficient_norm()
            assert np.max(np.abs(out.evaluate(points)), initial=0.0) <= 1e-8
        quad = region_quadrature(Region.ball(np.zeros(op.n), 1.0), 2 * (op.k + 2))
        values = np.stack([q.evaluate(quad.nodes) for q in basis.basis], axis=1)
        gram = np.einsum("a,aid,ajd->ij", quad.weights, values, values)
        assert np.allclose(gram, np.eye(basis.dim), atol=1e-8)


def test_stabilized_gradient():
    result = stabilized_nullspace(gradient(2), 6)
    assert result.stabilized
    assert result.degree == 0
    assert result.basis.dim == 1


def test_stabilized_symmetric_gradient():
    result = stabilized_nullspace(symmetric_gradient(2), 6)
    assert result.stabilized
    assert result.degree == 1
    assert result.basis.dim == 3
    assert result.dims_by_degree == [2, 3, 3, 3, 3, 3, 3]


def test_tracefree_symmetric_gradient_not_stabilized():
    result = stabilized_nullspace(tracefree_symmetric_gradient(2), 8)
    assert not result.stabilized
    assert result.basis is None
    dims = result.dims_by_degree
    assert all(b > a for a, b in zip(dims, dims[1:]))
    model = result.to_model()
    assert model.degree is None
    assert model.basis == []


def test_stabilized_requires_dmax():
    with pytest.raises(InputInvariantError):
        stabilized_nullspace(hessian(2), 3)


@pytest.mark.parametrize("n", [2, 3])
def test_dims_monotone_and_floor(n):
    for name in ZOO:
        if name == "cauchy_riemann" and n != 2:
            continue
        op = zoo_operator(name, n)
        dims = nullspace_dims(op, op.k + 2)
        assert all(b >= a for a, b in zip(dims, dims[1:]))
        assert dims[op.k - 1] == op.dim_v * comb(n + op.k - 1, n)


def test_report_model_serializes_basis():
    model = stabilized_nullspace(symmetric_gradient(2), 4).to_model()
    assert model.stabilized
    assert len(model.basis) == 3
    assert model.basis[0].dim == 2
