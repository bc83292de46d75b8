"""Interior-penalty diffusion operators for scattering acceleration.

The correction equation is a symmetric interior-penalty discretization of a
diffusion-reaction problem whose coefficients come from the cross sections:
diffusion sigma_s / (2 sigma_t^2) and reaction sigma_t - sigma_s.  Two
penalty choices are provided.  The plain SIP penalty scales like
D p^2 |F| / |kappa| and collapses in optically thick cells, where D ~ 1/sigma_t^2;
the MIP variant floors it by the facet moment of the ordinate set (the
half-range current factor), which keeps the operator comparable to the
transport facet coupling in every regime.  Boundary conditions: Dirichlet
penalizes the boundary trace like an interior facet, Marshak (vacuum Robin)
adds only the 1/pi boundary mass term and no penalty or consistency terms.

Matrices are symmetric by construction and positive definite whenever the
reaction term or the boundary terms see the constant mode.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import SparseOperator
from .quadrature import segment_rule

VARIANTS = ("sip", "mip")
BOUNDARY_MODELS = ("dirichlet", "marshak")

# half-range current constant of the continuum Marshak condition in 2D
MARSHAK_KAPPA = 1.0 / np.pi


@dataclass(frozen=True)
class DiffusionConfig:
    variant: str = "mip"
    boundary: str = "marshak"
    prefactor: float = 10.0
    kappa: float = MARSHAK_KAPPA

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.boundary not in BOUNDARY_MODELS:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODELS}")
        if not self.prefactor > 0.0:
            raise ValueError("penalty prefactor must be positive")
        if not self.kappa > 0.0:
            raise ValueError("boundary mass coefficient must be positive")


@dataclass
class DiffusionCoefficients:
    """Per-cell diffusion and absorption derived from the cross sections."""

    diffusion: np.ndarray
    absorption: np.ndarray

    def __post_init__(self):
        self.diffusion = np.atleast_1d(np.asarray(self.diffusion, dtype=float))
        self.absorption = np.atleast_1d(np.asarray(self.absorption, dtype=float))
        if self.diffusion.shape != self.absorption.shape:
            raise ValueError("coefficient arrays must have matching shapes")
        if np.any(self.diffusion < 0.0) or np.any(self.absorption < 0.0):
            raise ValueError("coefficients must be nonnegative")

    @classmethod
    def from_cross_sections(cls, xs):
        return cls(xs.sigma_s / (2.0 * xs.sigma_t**2), xs.sigma_a)


def face_moment_interior(normal, quad):
    """Half the mean absolute normal component of the ordinate set.

    Orientation-independent; tends to 1/pi as the ordinate count grows.
    """
    normal = np.asarray(normal, dtype=float)
    return 0.5 * float(quad.weights @ np.abs(quad.ordinates @ normal))


def face_moment_boundary(normal, quad):
    """Outgoing half-range moment: sum of w * max(0, omega . n)."""
    normal = np.asarray(normal, dtype=float)
    return float(quad.weights @ np.maximum(quad.ordinates @ normal, 0.0))


def sip_penalty(prefactor, length, sides):
    """Penalty C * max over incident cells of D * max(p, 1)^2 * |F| / |cell|.

    `sides` holds (diffusion, degree, area) for the one or two incident
    cells.  The max(p, 1) substitution keeps piecewise constants penalized.
    """
    if not sides:
        raise ValueError("penalty needs at least one incident cell")
    best = 0.0
    for diff, degree, area in sides:
        if area <= 0.0:
            raise ValueError("incident cell area must be positive")
        best = max(best, diff * max(int(degree), 1) ** 2 * length / area)
    return prefactor * best


def mip_penalty(sip_value, moment):
    """Floor the SIP penalty by the facet moment of the ordinate set."""
    return max(sip_value, moment)


def _facet_sigma(mesh, space, coeffs, config, quad, f, interior):
    length = mesh.facet_lengths[f]
    cm, cp = mesh.facet_cells[f]
    sides = [(coeffs.diffusion[cm], int(space.degrees[cm]), mesh.cell_areas[cm])]
    if interior:
        sides.append(
            (coeffs.diffusion[cp], int(space.degrees[cp]), mesh.cell_areas[cp])
        )
    sigma = sip_penalty(config.prefactor, length, sides)
    if config.variant == "mip":
        n = mesh.facet_normals[f]
        moment = (
            face_moment_interior(n, quad)
            if interior
            else face_moment_boundary(n, quad)
        )
        sigma = mip_penalty(sigma, moment)
    return sigma


def assemble_diffusion(mesh, space, coeffs, config, quad=None):
    """Symmetric interior-penalty diffusion-reaction operator."""
    if len(coeffs.diffusion) != mesh.n_cells:
        raise ValueError("coefficients sized for a different mesh")
    if config.variant == "mip" and quad is None:
        raise ValueError("the mip variant needs the ordinate set for its floors")

    rows = []
    cols = []
    vals = []

    def scatter(ei, ej, block):
        i0 = space.offsets[ei]
        j0 = space.offsets[ej]
        ni, nj = block.shape
        ii, jj = np.meshgrid(
            np.arange(i0, i0 + ni), np.arange(j0, j0 + nj), indexing="ij"
        )
        rows.append(ii.ravel())
        cols.append(jj.ravel())
        vals.append(block.ravel())

    for e in range(mesh.n_cells):
        rule = space.cell_rule(e, 2 * int(space.degrees[e]))
        _, grads = space.eval_basis(e, rule.points)
        w = rule.weights[:, None]
        stiff = (
            grads[:, :, 0].T @ (w * grads[:, :, 0])
            + grads[:, :, 1].T @ (w * grads[:, :, 1])
        )
        scatter(e, e, coeffs.diffusion[e] * stiff
                + coeffs.absorption[e] * space.element_mass[e])

    for f in range(mesh.n_facets):
        cm, cp = mesh.facet_cells[f]
        a, b = mesh.facet_vertices[f]
        n = mesh.facet_normals[f]
        interior = cp >= 0
        if not interior and config.boundary == "marshak":
            deg = int(space.degrees[cm])
            pts, wts = segment_rule(mesh.vertices[a], mesh.vertices[b], 2 * deg)
            vm, _ = space.eval_basis(cm, pts)
            scatter(cm, cm, config.kappa * (vm.T @ (wts[:, None] * vm)))
            continue

        deg = int(space.degrees[cm])
        if interior:
            deg = max(deg, int(space.degrees[cp]))
        pts, wts = segment_rule(mesh.vertices[a], mesh.vertices[b], 2 * deg)
        vm, gm = space.eval_basis(cm, pts)
        sigma = _facet_sigma(mesh, space, coeffs, config, quad, f, interior)

        if interior:
            vp, gp = space.eval_basis(cp, pts)
            # jump [u] = u_minus - u_plus along n; average of the normal flux
            jump = np.hstack([vm, -vp])
            flux = 0.5 * np.hstack(
                [coeffs.diffusion[cm] * (gm @ n), coeffs.diffusion[cp] * (gp @ n)]
            )
        else:
            jump = vm
            flux = coeffs.diffusion[cm] * (gm @ n)

        consistency = flux.T @ (wts[:, None] * jump)
        local = -(consistency + consistency.T) + sigma * (jump.T @ (wts[:, None] * jump))

        nm = vm.shape[1]
        if interior:
            scatter(cm, cm, local[:nm, :nm])
            scatter(cm, cp, local[:nm, nm:])
            scatter(cp, cm, local[nm:, :nm])
            scatter(cp, cp, local[nm:, nm:])
        else:
            scatter(cm, cm, local)

    return SparseOperator.from_coo(
        space.n_dofs,
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
    )


def assemble_dsa_rhs(scatter_operator, phi_half, phi_prev):
    """Scattering-weighted flux change that drives the correction solve."""
    phi_half = np.asarray(phi_half, dtype=float)
    phi_prev = np.asarray(phi_prev, dtype=float)
    if phi_half.shape != phi_prev.shape or phi_half.ndim != 1:
        raise ValueError("flux iterates must be matching vectors")
    return scatter_operator @ (phi_half - phi_prev)
