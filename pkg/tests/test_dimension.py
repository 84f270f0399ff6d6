from fractions import Fraction

import numpy as np
import pytest

from coredim.dimension import (
    beta_matrix,
    block_trace,
    c_vectors,
    divisibility_probe,
    inclusion_matrix,
    invariance_check,
    k0_finite,
    limit_report,
    limit_trace,
    power_class,
    push_class,
    realize_class,
    trace_pairing,
)
from coredim.errors import NegativeEntry, NotInLattice, RankMismatch, ShapeMismatch, SizeGuardExceeded
from coredim.exact import Lattice, RationalMatrix, block_diag, int_matrix, rank
from coredim.fiber import build_fiber
from coredim.mapspec import builtin, parse_spec_text
from coredim.reference import (
    GASKET_B34,
    express,
    gasket_closed_form,
    k1_metadata,
    matrix_in_basis,
    reference_basis,
    tent_closed_form,
    tent_derived_form,
)

from oracles import normalized_block_trace

TENT, GASKET, SHIFT = builtin("tent"), builtin("gasket"), builtin("fullshift2")


def test_k0_ranks():
    assert [k0_finite(TENT, n).rank for n in range(7)] == [n + 1 for n in range(7)]
    assert [k0_finite(GASKET, n).rank for n in range(5)] == [3 * n + 1 for n in range(5)]
    assert [k0_finite(SHIFT, n).rank for n in range(6)] == [1] * 6


def test_k0_identity_and_rank_matching():
    pres = k0_finite(TENT, 2)
    assert pres.labels == ["K(1)", "C(1,half,1)", "K(0)", "C(0,half,2)"]
    ident = pres.identity()
    assert pres.common_rank(ident) == 4
    assert pres.raw(pres.coordinates(ident)) == ident
    with pytest.raises(RankMismatch):
        pres.common_rank([1, 0, 0, 0])
    with pytest.raises(NotInLattice):
        pres.coordinates([1, 0, 0, 0])


def test_realize_class_examples():
    pres = k0_finite(TENT, 2)
    ident = pres.identity()
    rc = realize_class(TENT, 2, ident)
    assert rc.rank == 4 and len(rc.copies) == 1
    assert rc.copies[0]["1"] == RationalMatrix.identity(4)
    double = realize_class(TENT, 2, [2 * x for x in ident])
    assert len(double.copies) == 2
    with pytest.raises(NegativeEntry):
        realize_class(TENT, 2, [-1, 0, 0, 0])
    with pytest.raises(RankMismatch):
        realize_class(TENT, 2, [1, 0, 0, 0])
    with pytest.raises(ShapeMismatch):
        realize_class(TENT, 2, [1, 0])


def _images_by_fiber(spec, n, v, choice=0):
    """Level ``n+1`` fibers of ``T (x) 1`` assembled directly from the
    realized projections, one list per singular point."""
    rc = realize_class(spec, n, v, choice)
    dim = spec.N**n
    out = {}
    for P in k0_finite(spec, n + 1).points:
        out[P] = [block_diag([rc.fiber(c, spec.image(P, j), dim) for j in range(spec.N)])
                  for c in range(len(rc.copies))]
    return rc, out


@pytest.mark.parametrize("spec,n_max", [(TENT, 3), (GASKET, 2)])
def test_inclusion_functorial_on_basis(spec, n_max):
    """Images of basis representatives keep weighted rank N * rank and
    the decomposition agrees with the computed raw image."""
    for n in range(n_max):
        pres = k0_finite(spec, n)
        cod = k0_finite(spec, n + 1)
        inc = inclusion_matrix(spec, n)
        for row, raw in zip(pres.basis, inc.raw_images):
            v = [int(x) for x in row]
            M = max(0, -min(v))
            shifted = [a + M * b for a, b in zip(v, pres.identity())]
            rc, fibers = _images_by_fiber(spec, n, shifted)
            got = []
            for P, Ts in fibers.items():
                fib = build_fiber(spec, P, n + 1)
                mult = [0] * len(fib.blocks)
                for T in Ts:
                    assert sum(m * b.weight for m, b in zip(fib.decompose(T), fib.blocks)) == rank(T)
                    mult = [a + b for a, b in zip(mult, fib.decompose(T))]
                got.extend(mult)
            assert cod.common_rank(got) == spec.N * rc.rank
            base = push_class(spec, n, pres.identity())
            assert [a - M * b for a, b in zip(got, base)] == list(raw)


@pytest.mark.parametrize("spec,n", [(TENT, 2), (TENT, 3), (GASKET, 1), (GASKET, 2)])
def test_push_independent_of_offset_and_choice(spec, n):
    pres = k0_finite(spec, n)
    for row in pres.basis:
        v = [int(x) for x in row]
        need = max(0, -min(v))
        for kind in ("inclusion", "beta"):
            ref = push_class(spec, n, v, kind)
            assert push_class(spec, n, v, kind, offset=need + 2) == ref
            assert push_class(spec, n, v, kind, offset=need + 1, choice=1) == ref
    with pytest.raises(ValueError):
        push_class(spec, n, [-1] * pres.ambient_dim, offset=0)


def test_tent_reference_matrices():
    assert np.all(matrix_in_basis(TENT, 1) == tent_closed_form(1))
    for n in range(2, 5):
        got = matrix_in_basis(TENT, n)
        assert np.all(got == tent_derived_form(n))
        assert not np.all(got == tent_closed_form(n))
    assert matrix_in_basis(TENT, 2).tolist() == [[0, 0, -1], [1, 0, 1], [0, 1, 1], [1, 1, 1]]


def test_gasket_reference_matrices():
    for n in range(1, 4):
        assert np.all(matrix_in_basis(GASKET, n) == gasket_closed_form(n))
    assert np.all(gasket_closed_form(3) == GASKET_B34)
    # Fixing X = Q swaps the b and c rows at odd target levels.
    fixed = matrix_in_basis(GASKET, 3, slots="fixed")
    swapped = GASKET_B34.copy()
    b, c = slice(5, 9), slice(9, 13)
    swapped[b], swapped[c] = GASKET_B34[c], GASKET_B34[b]
    assert np.all(fixed == swapped)


@pytest.mark.parametrize("spec,n_max", [(TENT, 5), (GASKET, 4), (SHIFT, 3)])
def test_reference_basis_is_a_lattice_basis(spec, n_max):
    for n in range(n_max + 1):
        ref = reference_basis(spec, n)
        pres = k0_finite(spec, n)
        assert Lattice.from_generators(int_matrix(ref), pres.ambient_dim) == pres.lattice
        assert express(ref, ref[0]) == [1] + [0] * (len(ref) - 1)


def test_fullshift_maps():
    for n in range(4):
        assert inclusion_matrix(SHIFT, n).matrix.tolist() == [[2]]
        assert beta_matrix(SHIFT, n).matrix.tolist() == [[1]]


def test_injective_inclusions():
    for n in range(4):
        assert inclusion_matrix(TENT, n).injective
    for n in range(3):
        assert inclusion_matrix(GASKET, n).injective


def test_tent_beta_shifts_power_classes():
    for n in range(5):
        assert push_class(TENT, n, power_class(TENT, n), "beta") == power_class(TENT, n + 1)


def test_c_vectors():
    cs = c_vectors(TENT, 5)
    for m, c in enumerate(cs):
        assert c == [Fraction(0)] * m + [Fraction(1, 2**m)] * (6 - m)


def test_tent_trace_tables():
    tp = trace_pairing(TENT, 1, 3, basis=reference_basis(TENT, 1))
    assert tp.values.to_fractions() == [
        [1, Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)],
        [0, Fraction(1, 2), Fraction(1, 2), Fraction(1, 2), Fraction(1, 2)],
    ]
    tp = trace_pairing(TENT, 3, 3, basis=reference_basis(TENT, 3))
    assert [r[2] for r in tp.values.to_fractions()] == [Fraction(1, 4)] * 3 + [0]


@pytest.mark.parametrize("spec,n_max,r_max", [(TENT, 4, 5), (GASKET, 2, 3)])
def test_trace_invariance(spec, n_max, r_max):
    for n in range(n_max):
        assert invariance_check(spec, n, r_max)


@pytest.mark.parametrize("spec,n", [(TENT, 2), (TENT, 3), (GASKET, 2)])
def test_block_trace_matches_matrix_trace(spec, n):
    """The block functional agrees with the normalized matrix trace of the
    realized projection on that block."""
    pres = k0_finite(spec, n)
    for row in pres.basis:
        v = [int(x) + 2 * int(y) for x, y in zip(row, pres.identity())]
        if min(v) < 0:
            continue
        rc = realize_class(spec, n, v)
        for b in spec.branched:
            for r in range(n):
                P = next(P for P in pres.points if pres.block_index(P, b, n - r) is not None)
                fib = build_fiber(spec, P, n)
                k = pres.block_index(P, b, n - r) - pres.point_slice(P).start
                z = fib.centrals[k - 1].to_fractions()
                e = spec.multiplicity[b]
                total = sum(normalized_block_trace(z, rc.copies[c][P].to_fractions(), e, fib.blocks[k].size)
                            for c in range(len(rc.copies)))
                functional = block_trace(spec, n, b, r)
                # The functional reads multiplicity / N^r; the matrix trace gives
                # multiplicity / block size, and block size is N^r.
                assert fib.blocks[k].size == spec.N**r
                assert sum(x * y for x, y in zip(functional, v)) == total
        assert limit_trace(spec, n, v) == Fraction(rc.rank, spec.N**n)


def test_divisibility():
    assert not any(divisibility_probe(TENT, n)["solvable"] for n in range(1, 6))
    assert divisibility_probe(SHIFT, 1)["solvable"] is False
    probe = divisibility_probe(SHIFT, 2)
    assert probe["solvable"] and probe["witness"] == [1]


def test_limit_report():
    rep = limit_report(TENT, 4, 4)
    assert rep.ranks == [1, 2, 3, 4, 5]
    assert rep.all_injective and rep.all_trace_invariant
    assert all(lv.phi_independent for lv in rep.levels)
    assert all(lv.phi_in_c_span for lv in rep.levels)
    shift = limit_report(SHIFT, 3, 2)
    assert shift.ranks == [1] * 4
    assert all(lv.phi_independent is None for lv in shift.levels)
    with pytest.raises(SizeGuardExceeded):
        limit_report(TENT, 4, 4, guard=16)


def test_k1_metadata():
    assert k1_metadata(TENT)["status"] == "known"
    assert "UHF" in k1_metadata(SHIFT)["reason"]
    other = parse_spec_text('branch_count = 2\npoints = ["a"]\n[gamma.a]\n0 = "a"\n')
    assert k1_metadata(other)["status"] == "Unknown"
