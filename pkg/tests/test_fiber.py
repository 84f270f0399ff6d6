import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from coredim.errors import (
    DuplicatePosition,
    NotAProjection,
    NotInFiberAlgebra,
    ShapeMismatch,
    SizeGuardExceeded,
    UnknownPoint,
)
from coredim.exact import RationalMatrix, projection_onto, rank
from coredim.fiber import (
    SIZE_GUARD_ENV,
    build_fiber,
    decompose_projection,
    fiber_decomposition,
    minimal_projection,
    pi_embed,
    sigma_embed,
)
from coredim.mapspec import builtin, parse_spec_text, singular_points, validate

from oracles import dense_Q
from strategies import random_member, random_specs

# A triple branch point: gamma_0, gamma_1, gamma_2 all send a to b.
TRIPLE = """
branch_count = 4
points = ["a", "b"]
[gamma.a]
0 = "b"
1 = "b"
2 = "b"
3 = "a"
"""


def F(rows):
    return RationalMatrix.from_rows(rows)


def half(x):
    return Fraction(x, 2)


def block_sizes(dec):
    return [(b.kind, b.size) for b in dec.blocks]


def test_tent_fiber_examples():
    t = builtin("tent")
    assert block_sizes(fiber_decomposition(t, "1", 3)) == [("compact", 4), ("singular", 4)]
    dec = fiber_decomposition(t, "0", 3)
    assert [b.tag for b in dec.blocks] == ["K(0)", "C(0,half,2)", "C(0,half,3)"]
    assert block_sizes(dec) == [("compact", 5), ("singular", 2), ("singular", 1)]
    assert dec.summary() == "M_5 ⊕ M_1 ⊕ M_2"
    assert block_sizes(fiber_decomposition(t, None, 3)) == [("compact", 8)]


def test_gasket_fiber_example():
    g = builtin("gasket")
    for n in range(1, 4):
        dec = fiber_decomposition(g, "P", n)
        assert dec.blocks[0].size == (3**n + 1) // 2
        assert [(b.base, b.p, b.size) for b in dec.blocks[1:]] == [("T", p, 3 ** (n - p)) for p in range(1, n + 1)]


def test_pi_embed_examples():
    I2 = RationalMatrix.identity(2)
    assert pi_embed(2, 1, [(0,)], I2) == RationalMatrix.diagonal([1, 1, 0, 0])
    A = F([[1, 2], [3, 4]])
    assert pi_embed(2, 1, [(0,), (1,)], A) == RationalMatrix.identity(2).kron(A)
    B = F([[1, 0, 0], [0, 2, 0], [0, 0, 3]])
    assert pi_embed(3, 1, [(j,) for j in range(3)], B) == RationalMatrix.identity(3).kron(B)
    with pytest.raises(DuplicatePosition):
        pi_embed(2, 1, [(0,), (0,)], I2)
    with pytest.raises(ShapeMismatch):
        pi_embed(2, 2, [(0,)], I2)


def test_sigma_embed_examples():
    assert sigma_embed(2, 0, (0,), (1,), F([[1]])) == F([[1, 1], [1, 1]])
    with pytest.raises(DuplicatePosition):
        sigma_embed(2, 0, (0,), (0,), F([[1]]))
    with pytest.raises(ShapeMismatch):
        sigma_embed(2, 1, (0,), (1,), F([[1]]))


def test_singular_element_from_pi_and_sigma():
    A = F([[1, 2], [3, 4]])
    elem = pi_embed(2, 1, [(0,), (1,)], A) - sigma_embed(2, 1, (0,), (1,), A).scale(Fraction(1, 2))
    h = A.scale(Fraction(1, 2)).to_fractions()
    want = [r + [-x for x in r] for r in h] + [[-x for x in r] + r for r in h]
    assert elem == F(want)


def test_central_projection_rank():
    t = builtin("tent")
    fib = build_fiber(t, "1", 3)
    (z,) = fib.centrals
    assert rank(z) == 4
    g = build_fiber(builtin("gasket"), "P", 2)
    assert [rank(z) for z in g.centrals] == [3, 1]


def test_minimal_projection_examples():
    t = builtin("tent")
    fib = build_fiber(t, "1", 1)
    assert minimal_projection(fib, 1) == F([[half(1), half(-1)], [half(-1), half(1)]])
    assert rank(minimal_projection(fib, 0)) == 1
    g = build_fiber(builtin("gasket"), "P", 1)
    p = minimal_projection(g, 1)
    assert p == F([[0, 0, 0], [0, half(1), half(-1)], [0, half(-1), half(1)]])
    assert rank(p) == 1
    assert (p @ g.Q).is_zero()


def test_decompose_examples():
    t = builtin("tent")
    fib = build_fiber(t, "1", 3)
    assert decompose_projection(fib, RationalMatrix.identity(8)) == (4, 4)
    assert decompose_projection(fib, fib.Q) == (4, 0)
    for n in range(1, 5):
        J = F([[Fraction(1, 2**n)] * 2**n] * 2**n)
        for P in singular_points(t, n):
            f = build_fiber(t, P, n)
            assert decompose_projection(f, J) == (1,) + (0,) * (len(f.blocks) - 1)
            assert decompose_projection(f, f.Q) == (f.blocks[0].size,) + (0,) * (len(f.blocks) - 1)


def test_decompose_rejects_non_members():
    fib = build_fiber(builtin("tent"), "1", 1)
    with pytest.raises(NotAProjection):
        fib.decompose(RationalMatrix.identity(2).scale(2))
    with pytest.raises(NotAProjection):
        fib.decompose(F([[0, 1], [0, 0]]))
    with pytest.raises(NotInFiberAlgebra):
        fib.decompose(RationalMatrix.diagonal([1, 0]))
    with pytest.raises(ShapeMismatch):
        fib.decompose(RationalMatrix.identity(3))


def test_triple_branch_pattern_check():
    spec = parse_spec_text(TRIPLE)
    assert spec.multiplicity == {"b": 3}
    fib = build_fiber(spec, "a", 1)
    assert [(b.kind, b.size, b.weight) for b in fib.blocks] == [("compact", 2, 1), ("singular", 1, 2)]
    # A rank-one projection inside the range of z commutes with Q and z but
    # is not of the form (I - J/3) (x) A.
    T = projection_onto([[1, -1, 0, 0]])
    assert T @ fib.centrals[0] == T and (T @ fib.Q).is_zero()
    with pytest.raises(NotInFiberAlgebra):
        fib.decompose(T)
    assert fib.decompose(fib.centrals[0]) == (0, 1)


def test_size_guard(monkeypatch):
    t = builtin("tent")
    with pytest.raises(SizeGuardExceeded):
        build_fiber(t, "0", 13)
    with pytest.raises(SizeGuardExceeded):
        build_fiber(t, "0", 4, guard=8)
    monkeypatch.setenv(SIZE_GUARD_ENV, "8")
    with pytest.raises(SizeGuardExceeded):
        build_fiber(t, "0", 4)
    assert build_fiber(t, "0", 3).dimension == 8
    # The combinatorial report needs no matrices.
    assert fiber_decomposition(t, "0", 13).blocks[0].size == 2**12 + 1
    with pytest.raises(UnknownPoint):
        build_fiber(t, "nowhere", 2)


@pytest.mark.parametrize("name,n_max", [("tent", 5), ("gasket", 3), ("fullshift2", 4)])
def test_Q_matches_word_oracle(name, n_max):
    spec = builtin(name)
    for n in range(1, n_max + 1):
        for P in list(spec.points) + [None]:
            assert build_fiber(spec, P, n).Q == F(dense_Q(spec, P, n))


def check_invariants(fib):
    D = fib.dimension
    Q, zs = fib.Q, fib.centrals
    projs = [Q] + zs
    for X in projs:
        assert X @ X == X and X == X.T
    for i, X in enumerate(projs):
        for Y in projs[i + 1:]:
            assert (X @ Y).is_zero() and (Y @ X).is_zero()
    total = projs[0]
    for z in zs:
        total = total + z
    assert total == RationalMatrix.identity(D)
    assert rank(Q) == fib.blocks[0].size
    for k, blk in enumerate(fib.blocks):
        p = fib.minimal_projection(k)
        assert rank(p) == blk.weight
        assert fib.decompose(p) == tuple(int(i == k) for i in range(len(fib.blocks)))


@settings(max_examples=30, deadline=None)
@given(random_specs())
def test_random_spec_fibers(raw):
    spec = validate(raw)
    for n in range(1, 4):
        if spec.N**n > 27:
            break
        for P in spec.points:
            fib = build_fiber(spec, P, n)
            assert fib.Q == F(dense_Q(spec, P, n))
            check_invariants(fib)


@pytest.mark.parametrize("name,n", [("tent", 3), ("gasket", 2), ("fullshift2", 3)])
def test_random_members_decompose(name, n):
    spec = builtin(name)
    rng = random.Random(name)
    points = singular_points(spec, n) or spec.points
    for trial in range(10):
        for P in points:
            fib = build_fiber(spec, P, n)
            T, mults = random_member(fib, rng)
            got = fib.decompose(T)
            assert got == mults
            assert sum(m * b.weight for m, b in zip(got, fib.blocks)) == rank(T)


def test_random_member_with_triple_branch():
    spec = parse_spec_text(TRIPLE)
    rng = random.Random(3)
    for n in (1, 2):
        fib = build_fiber(spec, "a", n)
        for _ in range(5):
            T, mults = random_member(fib, rng)
            assert fib.decompose(T) == mults
