"""B-spline geometry maps from the unit parameter box to a physical domain.

The geometry lives on a coarse mesh (single element by default) and is kept
fixed under refinement: refining the representation inserts knots and adjusts
control points so the map is unchanged.  Inversion is by Newton iteration
seeded from a cached sample lattice, with iterates clamped to the box;
physical-domain norms are computed by parameter-space quadrature with
Jacobian weights.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.linalg

from .bspline import _refinement_matrix, _space, collocation_matrix, greville, make_space
from .quadrature import element_grid, gauss_rule
from .spaces import stacked_sparse_basis
from .tensorops import tensor_weights

_DIFFEO_GRID = 33
_NEWTON_LATTICE = 17


def _is_pow2(m):
    return m >= 1 and (m & (m - 1)) == 0


class GeometryMap:
    """Tensor-product B-spline map with a control-point grid.

    `ctrl` has shape (n_1, ..., n_d, d) with n_i = 2**level + degree; control
    points are immutable after the build-time diffeomorphism check.
    """

    def __init__(self, degree, ctrl, _skip_checks=False):
        ctrl = np.asarray(ctrl, dtype=float)
        self.degree = int(degree)
        self.d = ctrl.ndim - 1
        if self.d < 1 or ctrl.shape[-1] != self.d:
            raise ValueError("control grid must have shape dims + (d,)")
        sizes = ctrl.shape[:-1]
        if len(set(sizes)) != 1:
            raise ValueError("control grid must have equal extent per direction")
        ncells = sizes[0] - self.degree
        if not _is_pow2(ncells):
            raise ValueError(f"control extent {sizes[0]} incompatible with "
                             f"degree {self.degree} on a dyadic mesh")
        self.level = ncells.bit_length() - 1
        self.space = _space(self.degree, self.level)
        self.ctrl = ctrl
        self.ctrl.setflags(write=False)
        if not _skip_checks:
            self._check_corners()
            self._check_jacobian()
        self._lattice = None
        self._sample_lattice()

    # -- build-time checks

    def _check_corners(self):
        for corner in itertools.product((0.0, 1.0), repeat=self.d):
            idx = tuple(0 if c == 0.0 else -1 for c in corner)
            val = self.eval(np.array(corner))
            if not np.allclose(val, self.ctrl[idx], atol=1e-12):
                raise ValueError("clamped map must interpolate corner control points")

    def _check_jacobian(self):
        axes = [np.linspace(0.0, 1.0, _DIFFEO_GRID)] * self.d
        det = np.linalg.det(self.jacobian_grid(axes))
        if det.min() <= 0.0:
            raise ValueError(f"Jacobian determinant not positive on sample grid "
                             f"(min {det.min():.3e})")

    # -- evaluation

    def _grid_contract(self, axes, alpha):
        out = self.ctrl
        for ax, a in zip(axes, alpha):
            E = collocation_matrix(self.space, np.atleast_1d(ax), a)
            out = np.tensordot(out, E.T, axes=([0], [0]))
        # axes are now (coords, grid...); put the coordinate axis last
        return np.moveaxis(out, 0, -1)

    def eval_grid(self, axes):
        """Map values on a tensor grid; shape grid + (d,)."""
        return self._grid_contract(axes, (0,) * self.d)

    def jacobian_grid(self, axes):
        """Jacobians on a tensor grid; shape grid + (d, d), J[..., i, j] =
        dF_i/dxi_j."""
        cols = [self._grid_contract(axes, tuple(int(j == k) for k in range(self.d)))
                for j in range(self.d)]
        return np.stack(cols, axis=-1)

    def _points_contract(self, pts, alpha):
        flat = pts.reshape(-1, self.d)
        rows = [collocation_matrix(self.space, flat[:, i], alpha[i])
                for i in range(self.d)]
        acc = np.tensordot(rows[0], self.ctrl, axes=([1], [0]))
        for i in range(1, self.d):
            acc = np.einsum("nj...,nj->n...", acc, rows[i])
        return acc.reshape(pts.shape)

    def eval(self, pts):
        """Map scattered parameter points of shape (..., d)."""
        pts = np.asarray(pts, dtype=float)
        return self._points_contract(pts, (0,) * self.d)

    def jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        cols = [self._points_contract(pts, tuple(int(j == k) for k in range(self.d)))
                for j in range(self.d)]
        return np.stack(cols, axis=-1)

    # -- inversion

    def _sample_lattice(self):
        if self._lattice is None:
            pts1 = np.linspace(0.0, 1.0, _NEWTON_LATTICE)
            grid = np.stack(np.meshgrid(*([pts1] * self.d), indexing="ij"), axis=-1)
            params = grid.reshape(-1, self.d)
            self._lattice = (params, self.eval(params))
        return self._lattice

    def inverse(self, x, tol=1e-12, maxiter=50):
        """Parameter preimage of physical points by Newton iteration.

        Starts from the lattice preimage nearest each target; iterates are
        clamped to the unit box.  Raises if the residual does not reach `tol`
        or a singular Jacobian is met.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x.reshape(-1, self.d)
        params, values = self._sample_lattice()
        d2 = ((values[None, :, :] - pts[:, None, :]) ** 2).sum(-1)
        xi = params[np.argmin(d2, axis=1)].copy()
        best = np.inf
        for _ in range(maxiter):
            r = self.eval(xi) - pts
            res = np.linalg.norm(r, axis=-1)
            best = min(best, res.max())
            if res.max() < tol:
                break
            J = self.jacobian(xi)
            det = np.linalg.det(J)
            if np.any(np.abs(det) < 1e-14):
                raise RuntimeError("singular Jacobian during Newton inversion")
            step = np.linalg.solve(J, r[..., None])[..., 0]
            xi = np.clip(xi - step, 0.0, 1.0)
        else:
            raise RuntimeError(f"Newton inversion did not converge "
                               f"(best residual {best:.3e})")
        return xi[0] if single else xi.reshape(x.shape)

    def refine(self):
        """One dyadic refinement of the representation; the map is unchanged."""
        R = _refinement_matrix(self.degree, self.level)
        ctrl = self.ctrl
        for axis in range(self.d):
            ctrl = np.moveaxis(np.tensordot(R, ctrl, axes=([1], [axis])), 0, axis)
        return GeometryMap(self.degree, ctrl, _skip_checks=True)


# ---------------------------------------------------------------------------
# built-in geometries


def identity_geometry(d, degree=1):
    """Control points at the Greville abscissae: F(xi) = xi exactly."""
    g = greville(_space(degree, 0))
    axes = np.meshgrid(*([g] * d), indexing="ij")
    return GeometryMap(degree, np.stack(axes, axis=-1))


def shear_geometry():
    """Planar affine shear x -> x + 0.4 y."""
    A = np.array([[1.0, 0.4], [0.0, 1.0]])
    base = identity_geometry(2, degree=1)
    return GeometryMap(1, base.ctrl @ A.T)


def distorted_square_geometry(shift=0.15):
    """Quadratic map of the unit square with the interior control point
    displaced; boundary edges stay straight, the parametrization does not."""
    base = identity_geometry(2, degree=2)
    ctrl = base.ctrl.copy()
    ctrl[1, 1] += shift
    return GeometryMap(2, ctrl)


_BUILTINS = {
    "identity": lambda: identity_geometry(2, degree=1),
    "shear": shear_geometry,
    "distorted-square": distorted_square_geometry,
}


def builtin_geometry(name):
    if name not in _BUILTINS:
        raise ValueError(f"unknown geometry '{name}'; available: {sorted(_BUILTINS)}")
    return _BUILTINS[name]()


# ---------------------------------------------------------------------------
# geometry specification files


def load_geometry(path):
    """Read the plain-text geometry format.

    Keys: ``degree <int>``, ``dims <n_1> ... <n_d>``, then a
    ``control_points`` line followed by one point per line (d whitespace
    separated coordinates) in row-major multi-index order (last index
    fastest).
    """
    degree = None
    dims = None
    points = []
    in_points = False
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if in_points:
                try:
                    points.append([float(tok) for tok in line.split()])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad control point line "
                                     f"{line!r}") from exc
                continue
            key, *rest = line.split()
            if key == "degree":
                degree = int(rest[0])
            elif key == "dims":
                dims = [int(tok) for tok in rest]
            elif key == "control_points":
                in_points = True
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    if degree is None or dims is None:
        raise ValueError(f"{path}: missing required keys 'degree' and 'dims'")
    d = len(dims)
    expect = int(np.prod(dims))
    if len(points) != expect:
        raise ValueError(f"{path}: expected {expect} control points, "
                         f"got {len(points)}")
    ctrl = np.array(points, dtype=float)
    if ctrl.shape[1] != d:
        raise ValueError(f"{path}: control points must have {d} coordinates")
    return GeometryMap(degree, ctrl.reshape(tuple(dims) + (d,)))


def save_geometry(geom, path):
    """Write a map in the plain-text geometry format."""
    with open(path, "w") as fh:
        fh.write(f"degree {geom.degree}\n")
        fh.write("dims " + " ".join(str(s) for s in geom.ctrl.shape[:-1]) + "\n")
        fh.write("control_points\n")
        for idx in itertools.product(*(range(s) for s in geom.ctrl.shape[:-1])):
            fh.write(" ".join(repr(float(c)) for c in geom.ctrl[idx]) + "\n")


# ---------------------------------------------------------------------------
# physical-domain norms


class PullbackFunction:
    """Composition f(F(.)) of a physical function with the geometry map,
    sampled on parameter tensor grids (values only; used with r = 0
    projections)."""

    def __init__(self, f_phys, geom):
        self.f_phys = f_phys
        self.geom = geom
        self.d = geom.d

    def eval_grid(self, axes, alpha=None):
        if alpha and any(alpha):
            raise ValueError("pullback supplies values only; project with r = 0")
        return self.f_phys.eval_points(self.geom.eval_grid(axes))


def pullback_error_norm(f_phys, u, geom, mode="semi", r=0, qpts=None):
    """Physical-domain H^r error norm of f_phys minus the push-forward of u.

    Integrates over the parameter domain with |det J| weights; physical
    gradients of the spline part are obtained from parameter gradients via
    the inverse Jacobian transpose.  Only r in {0, 1} is supported.
    """
    if r not in (0, 1):
        raise ValueError("physical norms support r in {0, 1} only")
    if mode not in ("semi", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    degree = u.degree
    level = u.finest_level
    qpts = qpts or degree + 3
    grids = [element_grid(make_space(degree, l), gauss_rule(qpts)) for l in level]
    axes = tuple(g[0] for g in grids)
    W = tensor_weights(tuple(g[1] for g in grids))
    J = geom.jacobian_grid(axes)
    det = np.linalg.det(J)
    Wphys = W * det
    phys_pts = geom.eval_grid(axes)

    total = 0.0
    if r == 0 or mode == "full":
        diff = f_phys.eval_points(phys_pts) - u.deriv_grid(axes)
        total += float(np.sum(Wphys * diff ** 2))
        if r == 0:
            return float(np.sqrt(total))
    Jinv = np.linalg.inv(J)
    d = geom.d
    grad_param = np.stack(
        [u.deriv_grid(axes, tuple(int(i == k) for k in range(d))) for i in range(d)],
        axis=-1)
    grad_u = np.einsum("...ji,...j->...i", Jinv, grad_param)
    for i in range(d):
        alpha = tuple(int(i == k) for k in range(d))
        diff = f_phys.eval_points(phys_pts, alpha) - grad_u[..., i]
        total += float(np.sum(Wphys * diff ** 2))
    return float(np.sqrt(total))


def mapped_rayleigh(rule, q, geom, qpts=None):
    """Largest physical H^1-seminorm vs L2 Rayleigh quotient over the mapped
    q-vanishing sparse basis, by quadrature-assembled Gram matrices."""
    if geom.d != rule.d:
        raise ValueError("geometry dimension does not match the level rule")
    basis = stacked_sparse_basis(rule, q)
    p, n, d = rule.p, rule.n, rule.d
    qpts = qpts or p + 3
    space_n = make_space(p, n)
    nodes, w1 = element_grid(space_n, gauss_rule(qpts))
    axes = (nodes,) * d
    W = tensor_weights((w1,) * d)
    J = geom.jacobian_grid(axes)
    det = np.linalg.det(J)
    Wphys = (W * det).ravel()
    Jinv = np.linalg.inv(J).reshape(-1, d, d)

    E0 = collocation_matrix(space_n, nodes, 0) @ basis.V
    E1 = collocation_matrix(space_n, nodes, 1) @ basis.V
    idx = [basis.entries[:, i] for i in range(d)]

    def value_matrix(deriv_dir):
        mats = [(E1 if i == deriv_dir else E0)[:, idx[i]] for i in range(d)]
        out = mats[0]
        for M in mats[1:]:
            out = (out[:, None, :] * M[None, :, :]).reshape(-1, out.shape[1])
        return out

    U = value_matrix(None)
    grads_param = [value_matrix(i) for i in range(d)]
    B = U.T @ (Wphys[:, None] * U)
    A = np.zeros_like(B)
    for i in range(d):
        Gi = sum(Jinv[:, j, i][:, None] * grads_param[j] for j in range(d))
        A += Gi.T @ (Wphys[:, None] * Gi)
    lam_max = scipy.linalg.eigh(A, B, eigvals_only=True)[-1]
    return float(np.sqrt(lam_max))
