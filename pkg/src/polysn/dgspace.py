"""Discontinuous piecewise-polynomial spaces on polygonal cells.

Each cell carries total-degree monomials in coordinates scaled to [-1, 1]
on the cell's axis-aligned bounding box, so basis values stay O(1)
regardless of cell size.  No continuity across facets; traces are evaluated
per cell.  If a cell's mass matrix is badly conditioned anyway (very thin
cells at higher degree) the basis is replaced by its mass-Cholesky
orthonormalization for that cell only.
"""

import numpy as np

from .quadrature import polygon_rule

_COND_LIMIT = 1e8


def local_dimension(degree):
    return (degree + 1) * (degree + 2) // 2


def _exponents(degree):
    exps = []
    for d in range(degree + 1):
        for i in range(d, -1, -1):
            exps.append((i, d - i))
    return np.asarray(exps, dtype=np.int64)


class DgSpace:
    def __init__(self, mesh, degree):
        self.mesh = mesh
        degs = np.asarray(degree, dtype=np.int64)
        if degs.ndim == 0:
            degs = np.full(mesh.n_cells, int(degs))
        if len(degs) != mesh.n_cells or np.any(degs < 0):
            raise ValueError("degree must be a nonnegative int or per-cell array")
        self.degrees = degs
        self.local_dims = np.array([local_dimension(p) for p in degs])
        self.offsets = np.concatenate([[0], np.cumsum(self.local_dims)])
        self.n_dofs = int(self.offsets[-1])
        self._exps = {int(p): _exponents(int(p)) for p in np.unique(degs)}

        # bounding-box scaling per cell
        self.box_center = np.empty((mesh.n_cells, 2))
        self.box_extent = np.empty((mesh.n_cells, 2))
        for e in range(mesh.n_cells):
            coords = mesh.cell_coords(e)
            lo = coords.min(axis=0)
            hi = coords.max(axis=0)
            self.box_center[e] = 0.5 * (lo + hi)
            self.box_extent[e] = hi - lo

        self._orthonormalize()

    def _orthonormalize(self):
        """Replace raw monomials by their Cholesky orthonormalization where
        the raw mass matrix is too ill-conditioned to invert reliably."""
        self.transforms = [None] * self.mesh.n_cells
        self.element_mass = []
        self.mass_condition = np.empty(self.mesh.n_cells)
        for e in range(self.mesh.n_cells):
            rule = polygon_rule(self.mesh.cell_coords(e), 2 * int(self.degrees[e]))
            vals = self._raw_values(e, rule.points)
            mass = vals.T @ (rule.weights[:, None] * vals)
            mass = 0.5 * (mass + mass.T)
            self.mass_condition[e] = np.linalg.cond(mass)
            if self.mass_condition[e] > _COND_LIMIT:
                chol = np.linalg.cholesky(mass)
                t = np.linalg.inv(chol) * np.sqrt(self.mesh.cell_areas[e])
                self.transforms[e] = t
                mass = t @ mass @ t.T
                mass = 0.5 * (mass + mass.T)
            self.element_mass.append(mass)

    def _raw_values(self, e, points):
        exps = self._exps[int(self.degrees[e])]
        xi = 2.0 * (points[:, 0] - self.box_center[e, 0]) / self.box_extent[e, 0]
        eta = 2.0 * (points[:, 1] - self.box_center[e, 1]) / self.box_extent[e, 1]
        return xi[:, None] ** exps[:, 0] * eta[:, None] ** exps[:, 1]

    def eval_basis(self, e, points):
        """Values (npts, nloc) and gradients (npts, nloc, 2) at physical points.

        Points need not lie inside cell e; monomials extrapolate, which is
        what facet traces from the neighbouring cell require.
        """
        if not 0 <= e < self.mesh.n_cells:
            raise ValueError(f"element {e} out of range")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        exps = self._exps[int(self.degrees[e])]
        ii = exps[:, 0]
        jj = exps[:, 1]
        sx = 2.0 / self.box_extent[e, 0]
        sy = 2.0 / self.box_extent[e, 1]
        xi = (points[:, 0] - self.box_center[e, 0]) * sx
        eta = (points[:, 1] - self.box_center[e, 1]) * sy

        xi_p = xi[:, None] ** ii
        eta_p = eta[:, None] ** jj
        vals = xi_p * eta_p
        # d/dxi xi^i = i xi^(i-1); guard the 0^0 case by clipping the exponent
        dxi = np.where(ii > 0, ii * xi[:, None] ** np.maximum(ii - 1, 0), 0.0)
        deta = np.where(jj > 0, jj * eta[:, None] ** np.maximum(jj - 1, 0), 0.0)
        grads = np.empty(vals.shape + (2,))
        grads[:, :, 0] = dxi * eta_p * sx
        grads[:, :, 1] = xi_p * deta * sy

        t = self.transforms[e]
        if t is not None:
            vals = vals @ t.T
            grads = np.einsum("qjd,ij->qid", grads, t)
        return vals, grads

    def cell_rule(self, e, exactness):
        return polygon_rule(self.mesh.cell_coords(e), exactness)

    def cell_slice(self, e):
        return slice(int(self.offsets[e]), int(self.offsets[e + 1]))

    def project(self, func, exactness=None):
        """Cellwise L2 projection of a pointwise callable onto the space."""
        out = np.empty(self.n_dofs)
        for e in range(self.mesh.n_cells):
            deg = int(self.degrees[e])
            rule = self.cell_rule(e, exactness if exactness is not None else 2 * deg + 6)
            vals, _ = self.eval_basis(e, rule.points)
            rhs = vals.T @ (rule.weights * func(rule.points))
            out[self.cell_slice(e)] = np.linalg.solve(self.element_mass[e], rhs)
        return out

    def broken_norm(self, coeffs):
        """L2 norm over the mesh of the field the coefficients represent."""
        coeffs = np.asarray(coeffs)
        if coeffs.shape != (self.n_dofs,):
            raise ValueError(f"expected {self.n_dofs} coefficients")
        acc = 0.0
        for e in range(self.mesh.n_cells):
            c = coeffs[self.cell_slice(e)]
            acc += c @ self.element_mass[e] @ c
        return float(np.sqrt(max(acc, 0.0)))

    def broken_error(self, coeffs, func, exactness=None):
        """L2 distance between the discrete field and a pointwise callable."""
        coeffs = np.asarray(coeffs)
        acc = 0.0
        for e in range(self.mesh.n_cells):
            deg = int(self.degrees[e])
            rule = self.cell_rule(e, exactness if exactness is not None else 2 * deg + 6)
            vals, _ = self.eval_basis(e, rule.points)
            diff = vals @ coeffs[self.cell_slice(e)] - func(rule.points)
            acc += rule.weights @ diff**2
        return float(np.sqrt(acc))

    def evaluate(self, coeffs, e, points):
        vals, _ = self.eval_basis(e, points)
        return vals @ np.asarray(coeffs)[self.cell_slice(e)]
