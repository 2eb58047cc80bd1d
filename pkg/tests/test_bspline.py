"""Univariate spline spaces: knots, evaluation, refinement, subspaces."""

import numpy as np
import pytest
from scipy.interpolate import BSpline

from sgsplines.bspline import (
    collocation_matrix,
    constraint_orders,
    eval_basis,
    eval_spline,
    greville,
    make_space,
    refinement_operator,
    vanishing_subspace,
)


def test_make_space_examples():
    s = make_space(0, 1)
    np.testing.assert_allclose(s.knots, [0.0, 0.5, 1.0])
    assert s.dim == 2
    assert make_space(2, 1).dim == 4
    assert make_space(2, 3).dim == 10


@pytest.mark.parametrize("p,level", [(0, 1), (1, 2), (2, 3), (3, 2), (4, 4)])
def test_knot_vector_invariants(p, level):
    s = make_space(p, level)
    knots = s.knots
    ncells = 2 ** level
    assert len(knots) == ncells - 1 + 2 * (p + 1)
    assert np.all(np.diff(knots) >= 0)
    np.testing.assert_array_equal(knots[:p + 1], 0.0)
    np.testing.assert_array_equal(knots[-(p + 1):], 1.0)
    interior = knots[p + 1:len(knots) - (p + 1)]
    np.testing.assert_allclose(interior, np.arange(1, ncells) / ncells)
    assert len(np.unique(interior)) == len(interior)


def test_make_space_rejects_bad_arguments():
    with pytest.raises(ValueError):
        make_space(2, 0)
    with pytest.raises(ValueError):
        make_space(-1, 2)


def test_hat_values():
    np.testing.assert_allclose(eval_basis(make_space(1, 1), 0.25), [0.5, 0.5, 0.0])


def test_partition_of_unity():
    rng = np.random.default_rng(42)
    for p in range(6):
        for level in range(1, 9):
            x = rng.random(100)
            B = collocation_matrix(make_space(p, level), x, 0)
            assert B.min() >= 0.0
            np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)


def test_local_support():
    rng = np.random.default_rng(7)
    for p in range(5):
        s = make_space(p, 4)
        B = collocation_matrix(s, rng.random(50), 0)
        assert (np.count_nonzero(B, axis=1) <= p + 1).all()


def test_derivative_sums_to_zero():
    row = eval_basis(make_space(2, 2), 0.3, 1)
    assert abs(row.sum()) < 1e-12


def test_eval_rejects_out_of_range():
    s = make_space(2, 2)
    with pytest.raises(ValueError):
        eval_basis(s, 0.5, 3)
    with pytest.raises(ValueError):
        eval_basis(s, 1.5, 0)
    with pytest.raises(ValueError):
        collocation_matrix(s, [-0.1, 0.5], 0)


@pytest.mark.parametrize("p,level", [(1, 2), (2, 3), (3, 2), (4, 3)])
def test_basis_matches_scipy(p, level):
    # independent oracle: scipy's BSpline with identity coefficients
    s = make_space(p, level)
    x = np.linspace(0.0, 1.0, 37)
    for m in range(p + 1):
        ours = collocation_matrix(s, x, m)
        ref = BSpline(s.knots, np.eye(s.dim), p)(x, nu=m)
        np.testing.assert_allclose(ours, ref, atol=1e-9 * max(1.0, np.abs(ref).max()))


def test_refinement_piecewise_constant():
    R = refinement_operator(make_space(0, 1), make_space(0, 2))
    np.testing.assert_array_equal(R, [[1, 0], [1, 0], [0, 1], [0, 1]])


def test_refinement_interior_hat():
    # interior coarse hat subdivides with weights 1/2, 1, 1/2
    R = refinement_operator(make_space(1, 2), make_space(1, 3))
    col = R[:, 2]
    nz = np.flatnonzero(col)
    np.testing.assert_allclose(col[nz], [0.5, 1.0, 0.5])


def test_refinement_reproduces_coarse_spline():
    rng = np.random.default_rng(0)
    coarse, fine = make_space(3, 2), make_space(3, 3)
    R = refinement_operator(coarse, fine)
    c = rng.standard_normal(coarse.dim)
    x = rng.random(64)
    err = np.abs(eval_spline(fine, R @ c, x) - eval_spline(coarse, c, x)).max()
    assert err < 1e-12


def test_nestedness_across_degrees_and_levels():
    rng = np.random.default_rng(5)
    for p in range(5):
        for level in range(1, 5):
            coarse, fine = make_space(p, level), make_space(p, level + 1)
            R = refinement_operator(coarse, fine)
            c = rng.standard_normal(coarse.dim)
            x = rng.random(40)
            err = np.abs(eval_spline(fine, R @ c, x) - eval_spline(coarse, c, x)).max()
            assert err < 1e-12


def test_refinement_rejects_mismatch():
    with pytest.raises(ValueError):
        refinement_operator(make_space(1, 2), make_space(2, 3))
    with pytest.raises(ValueError):
        refinement_operator(make_space(1, 2), make_space(1, 4))


def test_greville_linear_precision():
    for p in range(1, 5):
        s = make_space(p, 3)
        g = greville(s)
        x = np.linspace(0, 1, 17)
        np.testing.assert_allclose(collocation_matrix(s, x, 0) @ g, x, atol=1e-13)


@pytest.mark.parametrize("p,level,q,expected_dim", [
    (2, 3, 1, 8),    # one constraint pair u'(0) = u'(1) = 0
    (1, 2, 1, 5),    # no constraints: subspace equals parent
    (4, 4, 0, 16),   # orders 0 and 2 at both endpoints: 20 - 4
    (4, 3, 0, 8),    # same constraints on the dim-12 level-3 space
])
def test_vanishing_subspace_dims(p, level, q, expected_dim):
    sub = vanishing_subspace(make_space(p, level), q)
    assert sub.dim == expected_dim
    if not constraint_orders(p, q):
        np.testing.assert_array_equal(sub.basis, np.eye(sub.space.dim))


def test_vanishing_subspace_constraints_hold():
    for p in range(1, 6):
        for q in range(0, p + 1):
            s = make_space(p, 3)
            sub = vanishing_subspace(s, q)
            scale = np.abs(sub.basis).max()
            for m in constraint_orders(p, q):
                for x in (0.0, 1.0):
                    vals = eval_basis(s, x, m) @ sub.basis * s.h ** m
                    assert np.abs(vals).max() < 1e-10 * scale
            assert np.linalg.matrix_rank(sub.basis) == sub.dim
            assert sub.dim == s.dim - 2 * len(constraint_orders(p, q))


def test_vanishing_subspace_rejects_large_order():
    with pytest.raises(ValueError):
        vanishing_subspace(make_space(2, 2), 3)
