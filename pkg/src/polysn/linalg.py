"""Thin sparse-matrix layer: CSR storage, LU and CG solves, export.

Factorizations are meant to be computed once and reused across iterations;
`factorize` wraps SuperLU with a minimum-degree column ordering.  The CG
solver is deliberately plain (no preconditioning) and refuses matrices that
are not symmetric to rounding, since it exists as an independent check on
the LU route rather than as a production solver.
"""

import numpy as np
import scipy.io
import scipy.sparse
import scipy.sparse.linalg


class SingularMatrixError(RuntimeError):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class NoConvergenceError(RuntimeError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SparseOperator:
    """Square sparse operator in CSR form with canonical (sorted, summed)
    duplicate-free structure."""

    def __init__(self, matrix):
        csr = scipy.sparse.csr_matrix(matrix)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"operator must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        self.csr = csr

    @classmethod
    def from_coo(cls, dimension, rows, cols, values):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        coo = scipy.sparse.coo_matrix(
            (values, (rows, cols)), shape=(dimension, dimension)
        )
        return cls(coo.tocsr())

    @property
    def dimension(self):
        return self.csr.shape[0]

    @property
    def nnz(self):
        return self.csr.nnz

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape != (self.dimension,):
            raise ValueError(f"vector of length {self.dimension} expected")
        return self.csr @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def toarray(self):
        return self.csr.toarray()

    def symmetry_error(self):
        """max |A - A^T| entrywise."""
        diff = self.csr - self.csr.T
        return 0.0 if diff.nnz == 0 else float(np.abs(diff.data).max())

    def max_abs(self):
        return 0.0 if self.csr.nnz == 0 else float(np.abs(self.csr.data).max())

    def export_matrix_market(self, path):
        scipy.io.mmwrite(str(path), self.csr)

    @classmethod
    def import_matrix_market(cls, path):
        return cls(scipy.io.mmread(str(path)).tocsr())


class LuFactorization:
    def __init__(self, operator):
        csc = operator.csr.tocsc()
        empty_rows = np.flatnonzero(np.diff(operator.csr.indptr) == 0)
        if empty_rows.size:
            raise SingularMatrixError(
                f"structurally singular: row {empty_rows[0]} is empty",
                pivot=int(empty_rows[0]),
            )
        try:
            self._lu = scipy.sparse.linalg.splu(csc, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as err:
            raise SingularMatrixError(str(err)) from err
        self.dimension = operator.dimension

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dimension:
            raise ValueError(f"right-hand side of length {self.dimension} expected")
        return self._lu.solve(b)


def factorize(operator):
    """LU-factorize once; the result's solve() is cheap to call repeatedly."""
    return LuFactorization(operator)


def lu_solve(operator, b):
    return factorize(operator).solve(b)


def cg_solve(operator, b, tol=1e-12, max_iterations=None):
    """Unpreconditioned conjugate gradients for symmetric operators.

    Stops when ||r|| <= tol * ||b||.  Raises if the matrix is visibly
    nonsymmetric or the iteration cap (10x dimension) is hit.
    """
    n = operator.dimension
    scale = operator.max_abs()
    if operator.symmetry_error() > 1e-12 * max(scale, 1.0):
        raise ValueError("cg_solve requires a symmetric operator")
    b = np.asarray(b, dtype=float)
    if b.shape != (n,):
        raise ValueError(f"right-hand side of length {n} expected")
    cap = 10 * n if max_iterations is None else max_iterations

    x = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rr = r @ r
    target = tol * np.sqrt(b @ b)
    if np.sqrt(rr) <= target:
        return x
    for k in range(cap):
        ap = operator.matvec(p)
        denom = p @ ap
        if denom <= 0.0:
            raise NoConvergenceError(
                f"matrix is not positive definite (p^T A p = {denom!r})",
                iterations=k,
            )
        alpha = rr / denom
        x += alpha * p
        r -= alpha * ap
        rr_new = r @ r
        if np.sqrt(rr_new) <= target:
            return x
        p = r + (rr_new / rr) * p
        rr = rr_new
    raise NoConvergenceError(
        f"cg did not reach tolerance {tol} in {cap} iterations",
        iterations=cap,
        residual=float(np.sqrt(rr)),
    )
