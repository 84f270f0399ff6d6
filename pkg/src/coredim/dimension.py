"""K-theory of the finite cores and of their inductive limit.

``K_0`` of the level-``n`` core is presented inside the free group on the
blocks of all singular fibers: a vector of block multiplicities is a class
exactly when its weighted rank (multiplicity times minimal-projection rank)
is the same at every singular point.  This rank-matching rule assumes a
connected base space.

The inclusion ``T -> T (x) 1`` of consecutive cores and the endomorphism
``[P] -> [S P S*]`` are computed by realizing classes as explicit projection
matrices, assembling the level-``n+1`` fibers and decomposing them again.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import NegativeEntry, NotInLattice, RankMismatch, ShapeMismatch, SizeGuardExceeded
from .exact import (
    Lattice,
    RationalMatrix,
    block_diag,
    int_matrix,
    int_zeros,
    kernel_basis,
    rank,
    rational_solve,
    solve_in_lattice,
)
from .fiber import (
    Block,
    FiberDecomposition,
    build_fiber,
    diagonal_projection,
    fiber_decomposition,
    size_guard,
)
from .mapspec import Label, MapSpec, h_iterate, singular_points

ASSUMPTIONS = {"connected_base": "assumed", "genericity": "assumed"}


@dataclass(frozen=True)
class K0Presentation:
    spec: MapSpec
    level: int
    points: tuple[Label, ...]
    fibers: tuple[FiberDecomposition, ...]
    rank_functionals: np.ndarray = field(repr=False)
    lattice: Lattice = field(repr=False)

    @property
    def ambient_dim(self) -> int:
        return self.rank_functionals.shape[1]

    @property
    def rank(self) -> int:
        return self.lattice.rank

    @property
    def basis(self) -> np.ndarray:
        return self.lattice.basis

    @property
    def blocks(self) -> list[Block]:
        return [b for f in self.fibers for b in f.blocks]

    @property
    def labels(self) -> list[str]:
        if not self.points:
            return ["rank"]
        return [b.tag for b in self.blocks]

    def point_slice(self, point: Label) -> slice:
        start = 0
        for P, f in zip(self.points, self.fibers):
            if P == point:
                return slice(start, start + len(f.blocks))
            start += len(f.blocks)
        raise KeyError(point)

    def identity(self) -> list[int]:
        if not self.points:
            return [self.spec.N**self.level]
        return [b.size for b in self.blocks]

    def weighted_ranks(self, v: Sequence[int]) -> list[int]:
        return [int(x) for x in self.rank_functionals.dot(np.array(list(v), dtype=object))]

    def common_rank(self, v: Sequence[int]) -> int:
        ranks = self.weighted_ranks(v)
        if len(set(ranks)) != 1:
            raise RankMismatch(f"weighted ranks differ across singular points: {ranks}")
        return ranks[0]

    def coordinates(self, v: Sequence[int]) -> list[int]:
        return solve_in_lattice(self.lattice, list(v))

    def raw(self, coords: Sequence[int]) -> list[int]:
        return [int(x) for x in np.array(list(coords), dtype=object).dot(self.basis)]

    def block_index(self, point: Label, base: Label, p: int) -> Optional[int]:
        sl = self.point_slice(point)
        for k, b in enumerate(self.blocks[sl]):
            if b.kind == "singular" and b.base == base and b.p == p:
                return sl.start + k
        return None

    def to_json(self) -> dict:
        from .exact import matrix_to_json

        return {
            "level": self.level,
            "rank": self.rank,
            "points": list(self.points),
            "ambient_blocks": self.labels,
            "weights": [b.weight for b in self.blocks] if self.points else [1],
            "basis": matrix_to_json(self.basis),
            "identity": [str(x) for x in self.identity()],
        }


@functools.lru_cache(maxsize=None)
def k0_finite(spec: MapSpec, n: int) -> K0Presentation:
    """``K_0`` of the level-``n`` core as a kernel lattice."""
    if n < 0:
        raise ValueError("level must be >= 0")
    points = singular_points(spec, n) if n >= 1 else ()
    if not points:
        return K0Presentation(spec, n, (), (), int_matrix([[1]]), Lattice.standard(1))
    fibers = tuple(fiber_decomposition(spec, P, n) for P in points)
    width = sum(len(f.blocks) for f in fibers)
    F = int_zeros(len(points), width)
    col = 0
    for i, f in enumerate(fibers):
        for b in f.blocks:
            F[i, col] = b.weight
            col += 1
    diffs = F[:-1] - F[1:] if len(points) > 1 else int_zeros(0, width)
    return K0Presentation(spec, n, points, fibers, F, kernel_basis(diffs))


# -- realization ------------------------------------------------------


@dataclass(frozen=True)
class RealizedClass:
    """A class at level ``n`` written as a direct sum of ``len(copies)``
    projection families; ``copies[c][P]`` is the fiber at singular point
    ``P`` and ``generic_ranks[c]`` the rank used everywhere else."""

    level: int
    rank: int
    copies: tuple[dict, ...]
    generic_ranks: tuple[int, ...]
    multiplicities: tuple[dict, ...]

    def fiber(self, c: int, point: Optional[Label], dim: int) -> RationalMatrix:
        if point in self.copies[c]:
            return self.copies[c][point]
        return diagonal_projection(dim, self.generic_ranks[c])


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def realize_class(spec: MapSpec, n: int, v: Sequence[int], choice: int = 0,
                  guard: Optional[int] = None) -> RealizedClass:
    """Explicit projections representing the non-negative class ``v``.

    Raises:
        NegativeEntry: if ``v`` has a negative entry.
        RankMismatch: if the weighted ranks of ``v`` disagree.
    """
    pres = k0_finite(spec, n)
    v = [int(x) for x in v]
    if len(v) != pres.ambient_dim:
        raise ShapeMismatch(f"vector of length {len(v)}, expected {pres.ambient_dim}")
    if any(x < 0 for x in v):
        raise NegativeEntry(f"class {v} has a negative entry")
    r = pres.common_rank(v)
    dim = spec.N**n
    sizes = [b.size for b in pres.blocks] if pres.points else []
    k = max([1, _ceil_div(r, dim)] + [_ceil_div(m, s) for m, s in zip(v, sizes)])
    fibers = {P: build_fiber(spec, P, n, guard) for P in pres.points}
    copies, mults = [], []
    for c in range(k):
        fam, mm = {}, {}
        for P in pres.points:
            sl = pres.point_slice(P)
            m = [min(s, max(0, x - c * s)) for x, s in zip(v[sl], sizes[sl])]
            fam[P] = fibers[P].projection(m, choice)
            mm[P] = tuple(m)
        copies.append(fam)
        mults.append(mm)
    generic = tuple(min(dim, max(0, r - c * dim)) for c in range(k))
    return RealizedClass(n, r, tuple(copies), generic, tuple(mults))


def _offset(v: Sequence[int], offset: Optional[int]) -> int:
    need = max(0, -min(v))
    if offset is None:
        return need
    if offset < need:
        raise ValueError(f"offset {offset} is below the required {need}")
    return offset


def _push(spec: MapSpec, realized: RealizedClass, kind: str, guard: Optional[int]) -> list[int]:
    n = realized.level
    N = spec.N
    dim = N**n
    target = k0_finite(spec, n + 1)
    if not target.points:
        return [realized.rank * (N if kind == "inclusion" else 1)]
    q = RationalMatrix.from_rows([[Fraction(1, N)] * N] * N)
    out: list[int] = []
    for P in target.points:
        fib = build_fiber(spec, P, n + 1, guard)
        total = [0] * len(fib.blocks)
        for c in range(len(realized.copies)):
            if kind == "inclusion":
                T = block_diag([realized.fiber(c, spec.image(P, j), dim) for j in range(N)])
            else:
                T = realized.fiber(c, P, dim).kron(q)
            total = [a + b for a, b in zip(total, fib.decompose(T))]
        out.extend(total)
    return out


def push_class(spec: MapSpec, n: int, v: Sequence[int], kind: str = "inclusion",
               offset: Optional[int] = None, choice: int = 0,
               guard: Optional[int] = None) -> list[int]:
    """Raw level-``n+1`` image of the level-``n`` raw class ``v``.

    ``kind`` is ``"inclusion"`` for ``T -> T (x) 1`` or ``"beta"`` for
    ``[P] -> [S P S*]`` with the constant isometry.  Negative entries are
    handled by adding ``offset`` copies of the identity class first.
    """
    if kind not in ("inclusion", "beta"):
        raise ValueError(f"unknown map {kind!r}")
    pres = k0_finite(spec, n)
    v = [int(x) for x in v]
    M = _offset(v, offset)
    ident = pres.identity()
    shifted = [a + M * b for a, b in zip(v, ident)]
    image = _push(spec, realize_class(spec, n, shifted, choice, guard), kind, guard)
    if M:
        base = _push(spec, realize_class(spec, n, ident, 0, guard), kind, guard)
        image = [a - M * b for a, b in zip(image, base)]
    return image


@dataclass(frozen=True)
class InclusionMatrix:
    """Integer matrix of a level-``n`` to level-``n+1`` map of ``K_0``;
    column ``i`` holds the image of domain basis vector ``i``."""

    kind: str
    level: int
    matrix: np.ndarray
    domain: K0Presentation = field(repr=False)
    codomain: K0Presentation = field(repr=False)
    raw_images: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def injective(self) -> bool:
        return rank(self.matrix) == self.matrix.shape[1]


def _map_matrix(spec: MapSpec, n: int, kind: str, guard: Optional[int]) -> InclusionMatrix:
    dom, cod = k0_finite(spec, n), k0_finite(spec, n + 1)
    raws, cols = [], []
    for row in dom.basis:
        raw = push_class(spec, n, list(row), kind, guard=guard)
        raws.append(tuple(raw))
        try:
            cols.append(cod.coordinates(raw))
        except NotInLattice as exc:  # pragma: no cover - would be a bug
            raise NotInLattice(f"{kind} image {raw} breaks rank matching") from exc
    mat = int_matrix(list(zip(*cols))) if cols else int_zeros(cod.rank, 0)
    return InclusionMatrix(kind, n, mat, dom, cod, tuple(raws))


def _check_guard(spec: MapSpec, n: int, guard: Optional[int]) -> None:
    limit = size_guard(guard)
    if spec.N**n > limit:
        raise SizeGuardExceeded(f"N^{n} = {spec.N**n} exceeds the size guard {limit}")


@functools.lru_cache(maxsize=None)
def _cached_map(spec: MapSpec, n: int, kind: str) -> InclusionMatrix:
    return _map_matrix(spec, n, kind, guard=10**18)


def inclusion_matrix(spec: MapSpec, n: int, guard: Optional[int] = None) -> InclusionMatrix:
    """Matrix of ``K_0(F_n) -> K_0(F_{n+1})`` in the lattice bases."""
    _check_guard(spec, n + 1, guard)
    return _cached_map(spec, n, "inclusion")


def beta_matrix(spec: MapSpec, n: int, guard: Optional[int] = None) -> InclusionMatrix:
    """Matrix of ``[P] -> [S P S*]`` from level ``n`` to level ``n+1``."""
    _check_guard(spec, n + 1, guard)
    return _cached_map(spec, n, "beta")


def push_coordinates(spec: MapSpec, n: int, m: int, coords: Sequence[int],
                     guard: Optional[int] = None) -> list[int]:
    """Carry lattice coordinates from level ``n`` up to level ``m >= n``."""
    x = np.array(list(coords), dtype=object)
    for k in range(n, m):
        x = inclusion_matrix(spec, k, guard).matrix.dot(x)
    return [int(a) for a in x]


# -- traces -----------------------------------------------------------


def trace_labels(spec: MapSpec, r_max: int) -> list[tuple[Label, int]]:
    return [(b, r) for b in spec.branched for r in range(r_max + 1)]


def block_trace(spec: MapSpec, n: int, b: Label, r: int) -> Optional[list[Fraction]]:
    """Row functional of the model trace ``(b, r)`` on level-``n`` raw
    coordinates, or ``None`` when ``n <= r`` (the block does not exist yet)."""
    if n < r + 1:
        return None
    pres = k0_finite(spec, n)
    p = n - r
    X = h_iterate(spec, b, p)
    idx = pres.block_index(X, b, p)
    row = [Fraction(0)] * pres.ambient_dim
    row[idx] = Fraction(1, spec.N**r)
    return row


def limit_trace(spec: MapSpec, n: int, v: Sequence[int]) -> Fraction:
    """The Hutchinson-average trace: common rank divided by ``N^n``."""
    pres = k0_finite(spec, n)
    return Fraction(pres.common_rank(v), spec.N**n)


def trace_vector(spec: MapSpec, n: int, v: Sequence[int], r_max: int,
                 guard: Optional[int] = None) -> list[Fraction]:
    """``phi(v)``: all model traces ``(b, r)``, ``r <= r_max``, of the raw class ``v``."""
    pres = k0_finite(spec, n)
    out = []
    coords = None
    for b, r in trace_labels(spec, r_max):
        row = block_trace(spec, n, b, r)
        if row is not None:
            out.append(sum((x * y for x, y in zip(row, v)), Fraction(0)))
            continue
        if coords is None:
            coords = pres.coordinates(v)
        up = k0_finite(spec, r + 1).raw(push_coordinates(spec, n, r + 1, coords, guard))
        row = block_trace(spec, r + 1, b, r)
        out.append(sum((x * y for x, y in zip(row, up)), Fraction(0)))
    return out


@dataclass(frozen=True)
class TracePairing:
    level: int
    r_max: int
    labels: tuple[str, ...]
    values: RationalMatrix  # one row per lattice basis vector

    def to_json(self) -> dict:
        from .exact import matrix_to_json

        return {"level": self.level, "r_max": self.r_max, "labels": list(self.labels),
                "values": matrix_to_json(self.values)}


def trace_pairing(spec: MapSpec, n: int, r_max: int, basis=None,
                  guard: Optional[int] = None) -> TracePairing:
    """Model traces (and the limit trace, last column) on a basis of
    ``K_0`` at level ``n`` (the lattice basis unless ``basis`` is given)."""
    pres = k0_finite(spec, n)
    rows = pres.basis if basis is None else basis
    labels = [f"tau({b},{r})" for b, r in trace_labels(spec, r_max)] + ["tau(inf)"]
    values = [trace_vector(spec, n, list(v), r_max, guard) + [limit_trace(spec, n, list(v))]
              for v in rows]
    return TracePairing(n, r_max, tuple(labels), RationalMatrix.from_rows(values)
                        if values else RationalMatrix.zeros(0, len(labels)))


def power_class(spec: MapSpec, n: int) -> list[int]:
    """Raw class of the rank-one projection with all entries ``1/N^n``:
    one compact multiplicity at every singular point."""
    pres = k0_finite(spec, n)
    if not pres.points:
        return [1]
    out = []
    for f in pres.fibers:
        out.extend([1] + [0] * (len(f.blocks) - 1))
    return out


def c_vectors(spec: MapSpec, r_max: int, guard: Optional[int] = None) -> list[list[Fraction]]:
    return [trace_vector(spec, m, power_class(spec, m), r_max, guard) for m in range(r_max + 1)]


# -- limit report -----------------------------------------------------


@dataclass
class LevelReport:
    level: int
    presentation: K0Presentation
    inclusion: Optional[InclusionMatrix] = None
    beta: Optional[InclusionMatrix] = None
    traces: Optional[TracePairing] = None
    # None when the map has no model traces (no branched points).
    phi_independent: Optional[bool] = None
    phi_in_c_span: Optional[bool] = None
    phi_coordinates: list = field(default_factory=list)
    trace_invariant: Optional[bool] = None
    divisibility: Optional[dict] = None
    reference: Optional[dict] = None


@dataclass
class LimitReport:
    spec: MapSpec
    n_max: int
    r_max: int
    levels: list[LevelReport]
    c_vectors: list[list[Fraction]]
    k1: dict

    @property
    def ranks(self) -> list[int]:
        return [lv.presentation.rank for lv in self.levels]

    @property
    def all_injective(self) -> bool:
        return all(lv.inclusion.injective for lv in self.levels if lv.inclusion is not None)

    @property
    def all_trace_invariant(self) -> bool:
        return all(lv.trace_invariant for lv in self.levels if lv.trace_invariant is not None)


def divisibility_probe(spec: MapSpec, n: int, divisor: Optional[int] = None) -> dict:
    """Is the image of ``[p^1]`` at level ``n`` divisible by ``divisor``
    (default ``N``) inside ``K_0`` of the level-``n`` core?"""
    d = spec.N if divisor is None else divisor
    pres = k0_finite(spec, n)
    start = k0_finite(spec, 1).coordinates(power_class(spec, 1))
    x = push_coordinates(spec, 1, n, start)
    solvable = all(c % d == 0 for c in x)
    return {
        "level": n,
        "divisor": d,
        "target": x,
        "solvable": solvable,
        "witness": [c // d for c in x] if solvable else None,
    }


def invariance_check(spec: MapSpec, n: int, r_max: int) -> bool:
    """Every model trace and the limit trace agree on ``v`` and its image."""
    inc = inclusion_matrix(spec, n)
    for row, raw in zip(inc.domain.basis, inc.raw_images):
        before = trace_vector(spec, n, list(row), r_max) + [limit_trace(spec, n, list(row))]
        after = trace_vector(spec, n + 1, list(raw), r_max) + [limit_trace(spec, n + 1, list(raw))]
        if before != after:
            return False
    return True


def limit_report(spec: MapSpec, n_max: int, r_max: int, guard: Optional[int] = None) -> LimitReport:
    from .reference import k1_metadata, reference_inclusion

    _check_guard(spec, max(n_max, r_max + 1) + 1, guard)
    cs = c_vectors(spec, r_max)
    levels = []
    for n in range(n_max + 1):
        lv = LevelReport(n, k0_finite(spec, n))
        if n < n_max:
            lv.inclusion = inclusion_matrix(spec, n)
            lv.beta = beta_matrix(spec, n)
            lv.trace_invariant = invariance_check(spec, n, r_max)
            lv.reference = reference_inclusion(spec, n)
        lv.traces = trace_pairing(spec, n, r_max)
        if spec.branched:
            phi = [row[:-1] for row in lv.traces.values.to_fractions()]
            lv.phi_independent = rank(RationalMatrix.from_rows(phi)) == len(phi)
            coords = [rational_solve(cs, row) for row in phi]
            lv.phi_coordinates = coords
            lv.phi_in_c_span = all(
                c is not None and all(x.denominator == 1 for x in c) for c in coords
            )
        if n >= 1:
            lv.divisibility = divisibility_probe(spec, n)
        levels.append(lv)
    return LimitReport(spec, n_max, r_max, levels, cs, k1_metadata(spec))
