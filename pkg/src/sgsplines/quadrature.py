"""Gauss quadrature, Gram matrices, and univariate spline projections.

The projector of order r minimizes the H^r seminorm of the residual over the
spline space; its r-dimensional kernel (polynomials of degree < r inside the
space) is pinned by making the residual L2-orthogonal to polynomials of degree
< r, which leaves the minimized seminorm unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .bspline import collocation_matrix

MAX_GAUSS_POINTS = 16


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on the reference cell (0, 1); weights sum to 1."""

    points: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


@lru_cache(maxsize=None)
def gauss_rule(points):
    """Gauss-Legendre rule with the given number of points, exact for
    polynomials of degree 2*points - 1 on (0, 1)."""
    if not 1 <= points <= MAX_GAUSS_POINTS:
        raise ValueError(f"points must be in [1, {MAX_GAUSS_POINTS}], got {points}")
    t, w = np.polynomial.legendre.leggauss(points)
    return QuadratureRule(points, (t + 1.0) / 2.0, w / 2.0)


def element_grid(space, rule):
    """Quadrature nodes and weights tiled over the 2**level mesh cells."""
    h = space.h
    offsets = np.arange(space.num_cells) * h
    nodes = (offsets[:, None] + rule.nodes[None, :] * h).ravel()
    weights = np.tile(rule.weights * h, space.num_cells)
    return nodes, weights


@dataclass(frozen=True)
class GramMatrix:
    """Matrix of L2 inner products of r-th basis derivatives."""

    space: object
    r: int
    matrix: np.ndarray = field(repr=False)


def gram(space, r, rule=None):
    """Gram matrix of the r-th derivatives, assembled cell by cell with a rule
    exact for the degree-2(p-r) piecewise-polynomial integrand."""
    p = space.degree
    if r > p:
        raise ValueError(f"derivative order {r} exceeds degree {p}")
    if rule is None:
        rule = gauss_rule(p + 1)
    if rule.points < p + 1:
        raise ValueError(
            f"rule with {rule.points} points cannot integrate degree-{2 * p} "
            f"spline products exactly; need at least {p + 1}")
    nodes, weights = element_grid(space, rule)
    B = collocation_matrix(space, nodes, r)
    G = B.T @ (weights[:, None] * B)
    return GramMatrix(space, r, 0.5 * (G + G.T))


@lru_cache(maxsize=None)
def _gram_cached(space, r):
    return gram(space, r).matrix


def gram_matrix(space, r):
    """Cached raw Gram matrix of order r (default rule)."""
    return _gram_cached(space, r)


def _monomial_moments(space, r, nodes, weights):
    """Moment matrix Q[i, j] = integral of b_i * x^j for j < r."""
    B = collocation_matrix(space, nodes, 0)
    P = nodes[:, None] ** np.arange(r)[None, :]
    return B.T @ (weights[:, None] * P)


@lru_cache(maxsize=None)
def projection_matrices(space, r, qpts=None):
    """Linear maps from grid data to projected spline coefficients.

    Returns (nodes, weights, M0, Mr) with coefficients = M0 @ values for r = 0,
    and coefficients = M0 @ values + Mr @ r_th_derivative_values for r >= 1
    (the M0 part carries the kernel-pinning moment constraints).
    """
    p = space.degree
    if qpts is None:
        qpts = p + 3
    nodes, weights = element_grid(space, gauss_rule(qpts))
    if r == 0:
        B = collocation_matrix(space, nodes, 0)
        G = gram_matrix(space, 0)
        cho = scipy.linalg.cho_factor(G)
        M0 = scipy.linalg.cho_solve(cho, B.T * weights[None, :])
        return nodes, weights, M0, None
    m = space.dim
    Gr = gram_matrix(space, r)
    Q = _monomial_moments(space, r, nodes, weights)
    S = np.zeros((m + r, m + r))
    S[:m, :m] = Gr
    S[:m, m:] = Q
    S[m:, :m] = Q.T
    try:
        K = scipy.linalg.solve(S, np.eye(m + r), assume_a="sym")[:m]
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - internal error
        raise RuntimeError("singular seminorm-projection system") from exc
    Br = collocation_matrix(space, nodes, r)
    P = nodes[:, None] ** np.arange(r)[None, :]
    Mr = K[:, :m] @ (Br.T * weights[None, :])
    M0 = K[:, m:] @ (P.T * weights[None, :])
    return nodes, weights, M0, Mr


def _call_deriv(f, x, m):
    if m == 0:
        try:
            return np.asarray(f(x, 0), dtype=float)
        except TypeError:
            return np.asarray(f(x), dtype=float)
    return np.asarray(f(x, m), dtype=float)


def project_1d(space, f, r=0, qpts=None):
    """Coefficients of the seminorm H^r-orthogonal projection of ``f``.

    ``f`` is called as ``f(x)`` or ``f(x, m)`` on arrays of quadrature nodes;
    the m = r derivative is required when r >= 1.  Idempotent on members of
    the space.
    """
    if r > space.degree:
        raise ValueError(f"projection order {r} exceeds degree {space.degree}")
    nodes, _, M0, Mr = projection_matrices(space, r, qpts)
    if r == 0:
        return M0 @ _call_deriv(f, nodes, 0)
    return M0 @ _call_deriv(f, nodes, 0) + Mr @ _call_deriv(f, nodes, r)


def l2_error_1d(space, coeffs, f, qpts=None):
    """L2 norm of f minus the spline with the given coefficients."""
    if qpts is None:
        qpts = space.degree + 3
    nodes, weights = element_grid(space, gauss_rule(qpts))
    diff = _call_deriv(f, nodes, 0) - collocation_matrix(space, nodes, 0) @ coeffs
    return float(np.sqrt(np.sum(weights * diff ** 2)))
