"""Iteration drivers: source iteration, diffusion-accelerated iteration,
coupled reference solves, and empirical convergence factors.

Errors are measured in the broken L2 norm against a discrete reference
solution of the fully coupled ordinate system, so the reported factors
reflect the iteration alone and not the discretization error.  The
convergence factor is the geometric mean of the per-step error ratios over
the window of iterates whose error still exceeds a floor (1e-10 by
default); once errors drop to rounding level the ratios are noise and are
excluded.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .dsa import (
    DiffusionCoefficients,
    DiffusionConfig,
    assemble_diffusion,
    assemble_dsa_rhs,
)
from .linalg import LuFactorization, SparseOperator, factorize

DIVERGENCE_GUARD = 1e6


class InsufficientDataError(ValueError):
    """Too few error samples above the floor to estimate a factor."""


@dataclass
class RhoEstimate:
    rho: float
    factors: np.ndarray
    window: int


def empirical_rho(errors, floor=1e-10):
    """Geometric-mean error ratio over iterates still above the floor.

    Given errors e_0 .. e_N, the window ends at the last index M with
    e_M >= floor; the estimate is (e_M / e_0)^(1/M) and the per-step
    factors e_(n+1)/e_n for n < M are returned alongside.  A value above 1
    means the iteration diverged.
    """
    e = np.asarray(errors, dtype=float)
    if e.ndim != 1 or len(e) < 2:
        raise InsufficientDataError("need at least two error samples")
    above = np.flatnonzero(e >= floor)
    if len(above) == 0 or above[-1] < 1:
        raise InsufficientDataError(
            f"no decaying stretch above the floor {floor:g}"
        )
    window = int(above[-1])
    factors = e[1 : window + 1] / e[:window]
    rho = float((e[window] / e[0]) ** (1.0 / window))
    return RhoEstimate(rho, factors, window)


@dataclass
class ReferenceSolution:
    phi: np.ndarray
    kind: str  # "direct" (coupled sparse LU) or "iterative" (deep DSA run)
    residual: float
    psi: list | None = None


def reference_solution(system, dimension_cap=250_000):
    """Discrete reference scalar flux for the coupled ordinate system.

    Below the dimension cap the full block system (all ordinates coupled
    through scattering) is solved by sparse LU.  Above it, a MIP-Dirichlet
    accelerated iteration run to 1e-14 stands in, flagged "iterative".
    """
    nq = system.n_ordinates
    ndof = system.space.n_dofs
    if nq * ndof <= dimension_cap:
        weights = system.quad.weights
        s_csr = system.scatter.csr
        blocks = []
        for k in range(nq):
            row = [(-weights[m]) * s_csr for m in range(nq)]
            row[k] = system.operators[k].csr - weights[k] * s_csr
            blocks.append(row)
        coupled = scipy.sparse.bmat(blocks, format="csc")
        rhs = np.concatenate(system.loads)
        lu = factorize(SparseOperator(coupled))
        sol = lu.solve(rhs)
        psi = [sol[k * ndof : (k + 1) * ndof] for k in range(nq)]
        phi = system.scalar_flux(psi)
        # worst per-ordinate relative residual of A_k psi_k - S phi = L_k
        resid = 0.0
        for k in range(nq):
            r = system.operators[k] @ psi[k] - system.scatter @ phi - system.loads[k]
            scale = max(np.linalg.norm(system.loads[k]), np.linalg.norm(psi[k]), 1e-300)
            resid = max(resid, np.linalg.norm(r) / scale)
        return ReferenceSolution(phi, "direct", float(resid), psi)

    coeffs = DiffusionCoefficients.from_cross_sections(system.xs)
    config = DiffusionConfig(variant="mip", boundary="dirichlet")
    diff = assemble_diffusion(system.mesh, system.space, coeffs, config, system.quad)
    report = dsa_iteration(system, diff, tol=1e-14, cap=500)
    resid = report.relative_changes[-1] if len(report.relative_changes) else np.nan
    return ReferenceSolution(report.scalar_flux, "iterative", float(resid), None)


@dataclass
class IterationReport:
    scalar_flux: np.ndarray
    n_iterations: int
    termination: str  # "tolerance" | "cap" | "divergence"
    relative_changes: np.ndarray
    errors: np.ndarray | None
    rho: float
    factors: np.ndarray | None
    window: int
    divergent: bool
    correction_norms: np.ndarray | None
    timings: dict = field(default_factory=dict)


def _reference_phi(reference):
    if reference is None:
        return None
    if isinstance(reference, ReferenceSolution):
        return reference.phi
    return np.asarray(reference, dtype=float)


def _sweep_all(system, phi, threads):
    if threads <= 1:
        return [system.solve_direction(k, phi) for k in range(system.n_ordinates)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(system.solve_direction, k, phi)
            for k in range(system.n_ordinates)
        ]
        return [f.result() for f in futures]


def _finish(phi, n, termination, changes, errors, corrections, timings, floor):
    rho = np.nan
    factors = None
    window = 0
    err_arr = None
    if errors is not None:
        err_arr = np.asarray(errors)
        try:
            est = empirical_rho(err_arr, floor=floor)
            rho, factors, window = est.rho, est.factors, est.window
        except InsufficientDataError:
            pass
    return IterationReport(
        scalar_flux=phi,
        n_iterations=n,
        termination=termination,
        relative_changes=np.asarray(changes),
        errors=err_arr,
        rho=rho,
        factors=factors,
        window=window,
        divergent=bool(rho > 1.0),
        correction_norms=(
            np.asarray(corrections) if corrections is not None else None
        ),
        timings=timings,
    )


def _diverged(changes, errors):
    if errors is not None and errors[0] > 0.0:
        return errors[-1] > DIVERGENCE_GUARD * errors[0]
    if len(changes) > 1 and changes[0] > 0.0:
        return changes[-1] > DIVERGENCE_GUARD * changes[0]
    return False


def source_iteration(system, tol=1e-12, cap=50, reference=None, threads=1,
                     rho_floor=1e-10):
    """Unaccelerated fixed-point iteration on the scattering source."""
    space = system.space
    phi_star = _reference_phi(reference)
    phi = np.zeros(space.n_dofs)
    errors = [space.broken_norm(phi - phi_star)] if phi_star is not None else None
    changes = []
    timings = {"sweep": 0.0, "update": 0.0}
    termination = "cap"
    n = 0
    while n < cap:
        t0 = time.perf_counter()
        psi = _sweep_all(system, phi, threads)
        t1 = time.perf_counter()
        phi_new = system.scalar_flux(psi)
        norm_new = space.broken_norm(phi_new)
        diff_norm = space.broken_norm(phi_new - phi)
        r = diff_norm / norm_new if norm_new > 0.0 else (0.0 if diff_norm == 0.0 else np.inf)
        timings["sweep"] += t1 - t0
        timings["update"] += time.perf_counter() - t1
        changes.append(r)
        if errors is not None:
            errors.append(space.broken_norm(phi_new - phi_star))
        phi = phi_new
        n += 1
        if not np.all(np.isfinite(phi)):
            termination = "divergence"
            break
        if _diverged(changes, errors):
            termination = "divergence"
            break
        if r < tol:
            termination = "tolerance"
            break
    return _finish(phi, n, termination, changes, errors, None, timings, rho_floor)


def dsa_iteration(system, diffusion, tol=1e-12, cap=50, reference=None,
                  threads=1, initial_flux=None, rho_floor=1e-10):
    """Source iteration with a diffusion correction after every sweep.

    `diffusion` is the assembled correction operator (or its factorization);
    it is factorized exactly once, before the loop.
    """
    space = system.space
    if isinstance(diffusion, LuFactorization):
        diff_lu = diffusion
    else:
        diff_lu = factorize(diffusion)
    phi_star = _reference_phi(reference)
    phi = (
        np.array(initial_flux, dtype=float)
        if initial_flux is not None
        else np.zeros(space.n_dofs)
    )
    if phi.shape != (space.n_dofs,):
        raise ValueError("initial flux has the wrong length")
    errors = [space.broken_norm(phi - phi_star)] if phi_star is not None else None
    changes = []
    corrections = []
    timings = {"sweep": 0.0, "dsa_source": 0.0, "dsa_solve": 0.0, "update": 0.0}
    termination = "cap"
    n = 0
    while n < cap:
        t0 = time.perf_counter()
        psi = _sweep_all(system, phi, threads)
        phi_half = system.scalar_flux(psi)
        t1 = time.perf_counter()
        b = assemble_dsa_rhs(system.scatter, phi_half, phi)
        t2 = time.perf_counter()
        delta = diff_lu.solve(b)
        t3 = time.perf_counter()
        phi_new = phi_half + delta
        corrections.append(space.broken_norm(delta))
        norm_new = space.broken_norm(phi_new)
        diff_norm = space.broken_norm(phi_new - phi)
        r = diff_norm / norm_new if norm_new > 0.0 else (0.0 if diff_norm == 0.0 else np.inf)
        timings["sweep"] += t1 - t0
        timings["dsa_source"] += t2 - t1
        timings["dsa_solve"] += t3 - t2
        timings["update"] += time.perf_counter() - t3
        changes.append(r)
        if errors is not None:
            errors.append(space.broken_norm(phi_new - phi_star))
        phi = phi_new
        n += 1
        if not np.all(np.isfinite(phi)):
            termination = "divergence"
            break
        if _diverged(changes, errors):
            termination = "divergence"
            break
        if r < tol:
            termination = "tolerance"
            break
    return _finish(phi, n, termination, changes, errors, corrections, timings,
                   rho_floor)
