"""Tests for the triplet/CSR containers and the direct sparse solver."""

import numpy as np
import pytest

from chcross.sparse import (
    CsrMatrix,
    Factorization,
    SingularMatrixError,
    Triplets,
    compress,
    matvec,
    solve,
)


def random_triplets(rng, n, n_entries):
    rows = rng.integers(0, n, size=n_entries)
    cols = rng.integers(0, n, size=n_entries)
    vals = rng.uniform(-1.0, 1.0, size=n_entries)
    return Triplets(n, n, np.asarray(rows), np.asarray(cols), np.asarray(vals))


def dense_of(t):
    a = np.zeros((t.n_rows, t.n_cols))
    np.add.at(a, (np.asarray(t.rows), np.asarray(t.cols)), np.asarray(t.values))
    return a


def test_compress_sums_duplicate_entries():
    t = Triplets.from_entries([(0, 0, 1.0), (0, 0, 2.0)], 1, 1)
    a = compress(t)
    assert a.n_rows == a.n_cols == 1
    assert a.nnz == 1
    np.testing.assert_array_equal(a.values, [3.0])
    np.testing.assert_array_equal(a.toarray(), [[3.0]])


def test_compress_matches_dense_accumulation():
    rng = np.random.default_rng(7)
    for n in range(2, 9):
        t = random_triplets(rng, n, 5 * n)
        a = compress(t)
        np.testing.assert_allclose(a.toarray(), dense_of(t), rtol=0.0, atol=1e-14)


def test_compress_canonical_layout():
    rng = np.random.default_rng(11)
    t = random_triplets(rng, 6, 40)
    a = compress(t)
    assert a.row_ptr[0] == 0 and a.row_ptr[-1] == a.nnz
    assert np.all(np.diff(a.row_ptr) >= 0)
    for i in range(a.n_rows):
        cols = a.col_idx[a.row_ptr[i]:a.row_ptr[i + 1]]
        assert np.all(np.diff(cols) > 0)


def test_compress_keeps_explicit_zeros_in_pattern():
    t = Triplets.from_entries([(0, 0, 0.0), (1, 1, 1.0), (0, 1, 2.0)], 2, 2)
    a = compress(t)
    assert a.nnz == 3
    b = a.with_values(np.array([5.0, 6.0, 7.0]))
    np.testing.assert_array_equal(b.toarray(), [[5.0, 6.0], [0.0, 7.0]])


def test_with_values_rejects_wrong_length():
    a = compress(Triplets.from_entries([(0, 0, 1.0), (1, 1, 1.0)], 2, 2))
    with pytest.raises(ValueError):
        a.with_values(np.ones(3))


def test_matvec_matches_dense():
    rng = np.random.default_rng(3)
    t = random_triplets(rng, 7, 30)
    a = compress(t)
    x = rng.standard_normal(7)
    np.testing.assert_allclose(matvec(a, x), dense_of(t) @ x, rtol=0.0, atol=1e-14)


def test_matvec_rejects_wrong_dimension():
    a = compress(Triplets.from_entries([(0, 0, 1.0), (1, 1, 1.0)], 2, 2))
    with pytest.raises(ValueError):
        matvec(a, np.ones(3))


def test_solve_diagonal_system():
    a = compress(Triplets.from_entries([(0, 0, 2.0), (1, 1, 4.0)], 2, 2))
    x = solve(a, np.array([2.0, 8.0]))
    np.testing.assert_array_equal(x, [1.0, 2.0])


def test_solve_20x20_random_residual():
    rng = np.random.default_rng(20)
    n = 20
    dense = rng.uniform(-1.0, 1.0, size=(n, n)) + n * np.eye(n)
    rows, cols = np.nonzero(dense)
    t = Triplets(n, n, rows, cols, dense[rows, cols])
    b = rng.standard_normal(n)
    x = solve(compress(t), b)
    assert np.max(np.abs(dense @ x - b)) <= 1e-12


def test_solve_many_well_conditioned_systems():
    rng = np.random.default_rng(100)
    for trial in range(100):
        n = int(rng.integers(2, 40))
        dense = rng.uniform(-1.0, 1.0, size=(n, n)) + n * np.eye(n)
        rows, cols = np.nonzero(dense)
        a = compress(Triplets(n, n, rows, cols, dense[rows, cols]))
        b = rng.standard_normal(n)
        x = solve(a, b)
        resid = np.max(np.abs(dense @ x - b))
        assert resid <= 1e-12 * (1.0 + np.max(np.abs(b)))


def test_solve_structurally_empty_row_raises():
    a = compress(Triplets.from_entries([(0, 0, 1.0)], 2, 2))
    with pytest.raises(SingularMatrixError) as err:
        solve(a, np.ones(2))
    assert err.value.pivot == 1


def test_solve_numerically_singular_raises():
    entries = [(0, 0, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 1, 2.0)]
    a = compress(Triplets.from_entries(entries, 2, 2))
    with pytest.raises(SingularMatrixError):
        solve(a, np.ones(2))


def test_solve_rejects_tiny_pivot_ratio():
    a = compress(Triplets.from_entries([(0, 0, 1.0), (1, 1, 1e-20)], 2, 2))
    with pytest.raises(SingularMatrixError):
        solve(a, np.ones(2))


def test_solve_bitwise_deterministic():
    rng = np.random.default_rng(42)
    n = 15
    dense = rng.uniform(-1.0, 1.0, size=(n, n)) + n * np.eye(n)
    rows, cols = np.nonzero(dense)
    t = Triplets(n, n, rows, cols, dense[rows, cols])
    b = rng.standard_normal(n)
    x1 = solve(compress(t), b)
    x2 = solve(compress(t), b)
    assert x1.tobytes() == x2.tobytes()


def test_factorization_reused_for_multiple_rhs():
    rng = np.random.default_rng(5)
    n = 12
    dense = rng.uniform(-1.0, 1.0, size=(n, n)) + n * np.eye(n)
    rows, cols = np.nonzero(dense)
    a = compress(Triplets(n, n, rows, cols, dense[rows, cols]))
    fac = Factorization(a)
    for k in range(3):
        b = rng.standard_normal(n)
        assert fac.solve(b).tobytes() == solve(a, b).tobytes()


def test_solve_with_ordering_matches_plain_solve():
    rng = np.random.default_rng(9)
    n = 18
    dense = rng.uniform(-1.0, 1.0, size=(n, n)) + n * np.eye(n)
    rows, cols = np.nonzero(dense)
    a = compress(Triplets(n, n, rows, cols, dense[rows, cols]))
    b = rng.standard_normal(n)
    ordering = rng.permutation(n)
    x = Factorization(a, ordering=ordering).solve(b)
    np.testing.assert_allclose(x, solve(a, b), rtol=0.0, atol=1e-12)


def test_invalid_ordering_rejected():
    a = compress(Triplets.from_entries([(0, 0, 1.0), (1, 1, 1.0)], 2, 2))
    with pytest.raises(ValueError):
        Factorization(a, ordering=np.array([0, 0]))
    with pytest.raises(ValueError):
        Factorization(a, ordering=np.array([0, 1, 2]))


def test_csr_roundtrip_through_scipy():
    t = Triplets.from_entries([(0, 0, 1.0), (2, 1, -2.0), (1, 2, 4.0)], 3, 3)
    a = compress(t)
    s = a.to_scipy()
    assert s.shape == (3, 3)
    np.testing.assert_array_equal(s.toarray(), a.toarray())
    assert isinstance(a, CsrMatrix)
