"""Sparse storage, LU and CG solves, and their cross-checks."""

import numpy as np
import pytest
import scipy.sparse

from polysn import (
    NoConvergenceError,
    SingularMatrixError,
    SparseOperator,
    cg_solve,
    factorize,
    lu_solve,
)


def random_spd(n, seed, density=0.2):
    rng = np.random.default_rng(seed)
    a = scipy.sparse.random(n, n, density=density, random_state=rng).toarray()
    dense = a @ a.T + n * np.eye(n)
    return SparseOperator(scipy.sparse.csr_matrix(dense))


class TestSparseOperator:
    def test_duplicate_summing(self):
        op = SparseOperator.from_coo(2, [0, 0, 1], [0, 0, 1], [1.0, 2.0, 5.0])
        assert op.nnz == 2
        assert np.allclose(op.toarray(), [[3.0, 0.0], [0.0, 5.0]])

    def test_sorted_indices(self):
        op = SparseOperator.from_coo(3, [0, 0, 0], [2, 0, 1], [1.0, 2.0, 3.0])
        assert np.all(np.diff(op.csr.indices[:3]) > 0)

    def test_matvec_shape_check(self):
        op = SparseOperator.from_coo(2, [0, 1], [0, 1], [1.0, 1.0])
        with pytest.raises(ValueError):
            op.matvec(np.zeros(3))

    def test_rectangular_rejected(self):
        with pytest.raises(ValueError):
            SparseOperator(scipy.sparse.csr_matrix(np.ones((2, 3))))

    def test_symmetry_error(self):
        op = SparseOperator(scipy.sparse.csr_matrix(np.array([[1.0, 2.0], [2.5, 1.0]])))
        assert abs(op.symmetry_error() - 0.5) <= 1e-15

    def test_matrix_market_round_trip(self, tmp_path):
        op = random_spd(10, seed=4)
        path = tmp_path / "op.mtx"
        op.export_matrix_market(path)
        again = SparseOperator.import_matrix_market(path)
        assert np.allclose(op.toarray(), again.toarray(), atol=0.0)


class TestLu:
    def test_identity(self):
        op = SparseOperator(scipy.sparse.eye(4, format="csr"))
        b = np.array([1.0, -2.0, 3.0, 0.5])
        assert np.allclose(lu_solve(op, b), b, atol=0.0)

    def test_diagonal_two_by_two(self):
        op = SparseOperator(scipy.sparse.csr_matrix(np.array([[2.0, 0.0], [0.0, 4.0]])))
        x = lu_solve(op, np.array([2.0, 8.0]))
        assert np.allclose(x, [1.0, 2.0], atol=1e-15)

    def test_residual_bound(self):
        op = random_spd(50, seed=1)
        rng = np.random.default_rng(2)
        b = rng.standard_normal(50)
        x = lu_solve(op, b)
        fro = scipy.sparse.linalg.norm(op.csr, "fro")
        resid = np.linalg.norm(op @ x - b)
        assert resid <= 1e-10 * (fro * np.linalg.norm(x) + np.linalg.norm(b))

    def test_solve_matches_cg(self):
        op = random_spd(50, seed=3)
        b = np.arange(1.0, 51.0)
        x_lu = lu_solve(op, b)
        x_cg = cg_solve(op, b, tol=1e-14)
        assert np.linalg.norm(x_lu - x_cg) <= 1e-8 * np.linalg.norm(x_lu)

    def test_solve_after_matvec_is_identity(self):
        op = random_spd(40, seed=5)
        rng = np.random.default_rng(6)
        x = rng.standard_normal(40)
        back = lu_solve(op, op @ x)
        assert np.linalg.norm(back - x) <= 1e-9 * np.linalg.norm(x)

    def test_factorization_reuse_bitwise(self):
        op = random_spd(30, seed=7)
        rng = np.random.default_rng(8)
        b = rng.standard_normal(30)
        lu = factorize(op)
        first = lu.solve(b)
        second = lu.solve(b)
        assert np.array_equal(first, second)
        assert np.array_equal(first, factorize(op).solve(b))

    def test_structurally_singular(self):
        op = SparseOperator.from_coo(3, [0, 2], [0, 2], [1.0, 1.0])
        with pytest.raises(SingularMatrixError) as err:
            factorize(op)
        assert err.value.pivot == 1

    def test_numerically_singular(self):
        dense = np.array([[1.0, 1.0], [1.0, 1.0]])
        op = SparseOperator(scipy.sparse.csr_matrix(dense))
        with pytest.raises(SingularMatrixError):
            lu_solve(op, np.array([1.0, 2.0]))

    def test_rhs_length_check(self):
        op = random_spd(5, seed=9)
        with pytest.raises(ValueError):
            factorize(op).solve(np.zeros(4))


class TestCg:
    def test_identity_single_iteration(self):
        op = SparseOperator(scipy.sparse.eye(3, format="csr"))
        b = np.array([1.0, 2.0, 3.0])
        assert np.allclose(cg_solve(op, b), b, atol=1e-14)

    def test_diagonal(self):
        op = SparseOperator(scipy.sparse.diags([1.0, 10.0, 100.0]).tocsr())
        x = cg_solve(op, np.array([1.0, 10.0, 100.0]), tol=1e-14)
        assert np.allclose(x, 1.0, atol=1e-12)

    def test_nonsymmetric_rejected(self):
        dense = np.array([[1.0, 2.0], [0.0, 1.0]])
        op = SparseOperator(scipy.sparse.csr_matrix(dense))
        with pytest.raises(ValueError):
            cg_solve(op, np.array([1.0, 1.0]))

    def test_iteration_cap(self):
        op = random_spd(50, seed=10)
        b = np.ones(50)
        with pytest.raises(NoConvergenceError) as err:
            cg_solve(op, b, tol=1e-15, max_iterations=2)
        assert err.value.iterations == 2

    def test_indefinite_detected(self):
        op = SparseOperator(scipy.sparse.diags([1.0, -1.0]).tocsr())
        with pytest.raises(NoConvergenceError):
            cg_solve(op, np.array([0.0, 1.0]))

    def test_zero_rhs(self):
        op = random_spd(8, seed=11)
        assert np.array_equal(cg_solve(op, np.zeros(8)), np.zeros(8))
