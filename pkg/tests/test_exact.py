from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coredim.errors import NotInLattice, ShapeMismatch
from coredim.exact import (
    Lattice,
    RationalMatrix,
    block_diag,
    det,
    hnf,
    int_identity,
    int_matrix,
    kernel_basis,
    matrix_from_json,
    matrix_to_json,
    projection_onto,
    rank,
    rational_solve,
    snf,
    solve_in_lattice,
)
from coredim.reference import GASKET_B34, tent_closed_form

small_ints = st.integers(-6, 6)


@st.composite
def int_matrices(draw, max_rows=5, max_cols=6):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    return int_matrix(draw(st.lists(st.lists(small_ints, min_size=c, max_size=c), min_size=r, max_size=r)))


def fraction_rank(M):
    """Plain Gaussian elimination over Fractions."""
    rows = [[Fraction(x) for x in r] for r in M.tolist()]
    r = 0
    for c in range(len(rows[0]) if rows else 0):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        for i in range(r + 1, len(rows)):
            f = rows[i][c] / rows[r][c]
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def test_rank_examples():
    assert rank(np.zeros((3, 3), dtype=object)) == 0
    assert rank(int_identity(5)) == 5
    assert rank(GASKET_B34) == 10
    assert rank(RationalMatrix.from_rows([[Fraction(1, 2), 1], [1, 2]])) == 1


@settings(max_examples=150, deadline=None)
@given(int_matrices())
def test_rank_matches_fraction_elimination(M):
    assert rank(M) == fraction_rank(M)


@settings(max_examples=150, deadline=None)
@given(int_matrices())
def test_hnf_properties(M):
    H, U = hnf(M)
    assert np.all(U.dot(M) == H)
    assert abs(det(U)) == 1
    pivots = []
    for i, row in enumerate(H):
        nz = [j for j, x in enumerate(row) if x != 0]
        if not nz:
            assert not any(any(r) for r in H[i:])
            break
        c = nz[0]
        assert row[c] > 0
        assert not pivots or c > pivots[-1]
        for k in range(i):
            assert 0 <= H[k, c] < row[c]
        pivots.append(c)
    H2, _ = hnf(H)
    assert np.all(H2 == H)


@settings(max_examples=150, deadline=None)
@given(int_matrices())
def test_snf_properties(M):
    S, U, V = snf(M)
    assert np.all(U.dot(M).dot(V) == S)
    assert abs(det(U)) == 1 and abs(det(V)) == 1
    r, c = S.shape
    assert all(S[i, j] == 0 for i in range(r) for j in range(c) if i != j)
    d = [S[i, i] for i in range(min(r, c))]
    assert all(x >= 0 for x in d)
    for a, b in zip(d, d[1:]):
        assert (b == 0) if a == 0 else b % a == 0


def test_snf_examples():
    S, _, _ = snf([[2, 0], [0, 3]])
    assert S.tolist() == [[1, 0], [0, 6]]
    S, _, _ = snf(tent_closed_form(2))
    assert S.tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 0]]
    unimodular = int_matrix([[2, 1], [1, 1]])
    assert snf(unimodular)[0].tolist() == [[1, 0], [0, 1]]


@settings(max_examples=150, deadline=None)
@given(int_matrices())
def test_kernel_basis_correct_and_complete(M):
    L = kernel_basis(M)
    for v in L.basis:
        assert not any(M.dot(v))
    assert rank(M) + L.rank == M.shape[1]
    # Saturation: the basis extends to a unimodular matrix iff SNF is all ones.
    if L.rank:
        S, _, _ = snf(L.basis)
        assert all(S[i, i] == 1 for i in range(L.rank))


def test_kernel_examples():
    assert kernel_basis([[1, -1]]).basis.tolist() == [[1, 1]]
    L = kernel_basis([[1, 1, -1, -1]])
    assert L.rank == 3
    rng = np.random.default_rng(7)
    M = int_matrix(rng.integers(-9, 10, size=(3, 6)).tolist())
    L = kernel_basis(M)
    assert L.rank == 3
    assert all(not any(M.dot(v)) for v in L.basis)


@settings(max_examples=100, deadline=None)
@given(int_matrices())
def test_solve_in_lattice_unit_vectors(M):
    L = Lattice.from_generators(M, M.shape[1])
    for i, row in enumerate(L.basis):
        assert solve_in_lattice(L, list(row)) == [int(i == k) for k in range(L.rank)]


def test_solve_in_lattice_examples():
    assert solve_in_lattice(Lattice.standard(2), [3, -1]) == [3, -1]
    L = kernel_basis([[1, 1, -1, -1]])
    with pytest.raises(NotInLattice):
        solve_in_lattice(L, [1, 0, 0, 0])
    with pytest.raises(NotInLattice):
        solve_in_lattice(Lattice.from_generators([[2, 0]], 2), [1, 0])
    with pytest.raises(ShapeMismatch):
        solve_in_lattice(L, [1, 2])


def test_rational_matrix_arithmetic():
    A = RationalMatrix.from_rows([[Fraction(1, 2), 0], [0, Fraction(2, 4)]])
    assert A.den == 2 and A.num.tolist() == [[1, 0], [0, 1]]
    B = A @ A
    assert B == RationalMatrix.from_rows([[Fraction(1, 4), 0], [0, Fraction(1, 4)]])
    assert (A + A) == RationalMatrix.identity(2)
    assert (A - A).is_zero()
    assert A.trace() == 1
    assert A.kron(RationalMatrix.identity(2)).shape == (4, 4)
    assert block_diag([A, RationalMatrix.identity(1)]).trace() == 2
    with pytest.raises(ShapeMismatch):
        A @ RationalMatrix.identity(3)


@settings(max_examples=80, deadline=None)
@given(int_matrices(), st.integers(1, 12))
def test_json_round_trip(M, d):
    R = RationalMatrix(M, d)
    assert matrix_from_json(matrix_to_json(R)) == R
    obj = matrix_to_json(M)
    assert all(isinstance(e, str) for e in obj["entries"])
    assert matrix_from_json(obj) == RationalMatrix(M)


def test_projection_onto_and_solve():
    P = projection_onto([[1, 1, 0], [0, 1, 1]])
    assert P @ P == P and P == P.T
    assert P.trace() == 2
    assert rational_solve([[1, 0], [1, 1]], [3, 2]) == [1, 2]
    assert rational_solve([[1, 0, 0]], [0, 1, 0]) is None
