"""Matrix fibers of the finite cores.

The level-``n`` fiber at a point ``P`` lives in ``M_{N^n}``.  Matrix index
``a`` corresponds to the word ``(i_1, ..., i_n)`` with ``a = sum i_k N^{n-k}``,
where ``i_1`` is the first contraction applied to ``P``.

The fiber splits as a compact block ``Q M Q`` (``Q`` averages over words
with equal endpoints) plus one singular block ``C(P, R, p)`` for every
branched point ``R`` with ``h^p(R) = P``, ``1 <= p <= n``.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DuplicatePosition,
    NotAProjection,
    NotInFiberAlgebra,
    ShapeMismatch,
    SizeGuardExceeded,
)
from .exact import RationalMatrix, int_zeros
from .mapspec import Label, MapSpec, backward_count, h_iterate, orbit_path, word_index

DEFAULT_SIZE_GUARD = 4096
SIZE_GUARD_ENV = "COREDIM_SIZE_GUARD"


def size_guard(override: Optional[int] = None) -> int:
    if override is not None:
        return override
    env = os.environ.get(SIZE_GUARD_ENV)
    return int(env) if env else DEFAULT_SIZE_GUARD


@dataclass(frozen=True)
class Block:
    kind: str  # "compact" or "singular"
    point: Optional[Label]
    size: int
    weight: int
    base: Optional[Label] = None
    p: int = 0
    prefix: tuple[int, ...] = ()
    entry_indices: tuple[int, ...] = ()

    @property
    def tag(self) -> str:
        pt = "x" if self.point is None else self.point
        if self.kind == "compact":
            return f"K({pt})"
        return f"C({pt},{self.base},{self.p})"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "tag": self.tag, "size": self.size, "weight": self.weight}
        if self.kind == "singular":
            out.update(base=self.base, p=self.p, prefix=list(self.prefix),
                       entry_indices=list(self.entry_indices))
        return out


@dataclass(frozen=True)
class FiberDecomposition:
    point: Optional[Label]
    level: int
    blocks: tuple[Block, ...]
    dimension: int

    def display_order(self) -> list[Block]:
        """Compact block first, then singular blocks from the deepest
        branching step up (increasing algebra size)."""
        return [self.blocks[0]] + sorted(self.blocks[1:], key=lambda b: -b.p)

    def summary(self) -> str:
        return " ⊕ ".join(f"M_{b.size}" for b in self.display_order())

    def identity_vector(self) -> list[int]:
        return [b.size for b in self.blocks]

    def to_json(self) -> dict:
        return {
            "point": self.point,
            "level": self.level,
            "dimension": self.dimension,
            "summary": self.summary(),
            "blocks": [b.to_json() for b in self.blocks],
        }


@functools.lru_cache(maxsize=None)
def fiber_decomposition(spec: MapSpec, point: Optional[Label], n: int) -> FiberDecomposition:
    """Block structure of the level-``n`` fiber at ``point`` (no matrices)."""
    spec.require(point)
    N = spec.N
    blocks = [Block("compact", point, backward_count(spec, point, n), 1)]
    if point is not None:
        for p in range(1, n + 1):
            for b in spec.branched:
                if h_iterate(spec, b, p) != point:
                    continue
                _, prefix = orbit_path(spec, b, p)
                e = spec.multiplicity[b]
                blocks.append(
                    Block("singular", point, N ** (n - p), e - 1, b, p, prefix, spec.entry_indices[b])
                )
    dec = FiberDecomposition(point, n, tuple(blocks), N**n)
    assert sum(b.size * b.weight for b in blocks) == dec.dimension
    return dec


def _word(a: int, N: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        a, r = divmod(a, N)
        out.append(r)
    return tuple(reversed(out))


def pi_embed(N: int, q: int, positions: Sequence[Sequence[int]], T: RationalMatrix) -> RationalMatrix:
    """Place ``T`` (size ``N^q``) on the diagonal blocks indexed by the
    given length-``p`` words, inside ``M_{N^{p+q}}``."""
    size = N**q
    if T.shape != (size, size):
        raise ShapeMismatch(f"T has shape {T.shape}, expected {(size, size)}")
    words = [tuple(w) for w in positions]
    if len(set(words)) != len(words):
        raise DuplicatePosition(f"repeated position in {words}")
    lengths = {len(w) for w in words}
    if len(lengths) > 1:
        raise ShapeMismatch("positions must have a common length")
    p = lengths.pop() if lengths else 0
    if any(not 0 <= j < N for w in words for j in w):
        raise ShapeMismatch("position digit out of range")
    out = int_zeros(N ** (p + q), N ** (p + q))
    for w in words:
        s = word_index(w, N) * size
        out[s : s + size, s : s + size] = T.num
    return RationalMatrix(out, T.den)


def sigma_embed(N: int, q: int, i: Sequence[int], j: Sequence[int], T: RationalMatrix) -> RationalMatrix:
    """Place ``T`` at the four blocks ``(i,i), (i,j), (j,i), (j,j)``."""
    i, j = tuple(i), tuple(j)
    if i == j:
        raise DuplicatePosition("sigma needs two distinct positions")
    if len(i) != len(j):
        raise ShapeMismatch("positions must have a common length")
    size = N**q
    if T.shape != (size, size):
        raise ShapeMismatch(f"T has shape {T.shape}, expected {(size, size)}")
    dim = N ** (len(i) + q)
    out = int_zeros(dim, dim)
    starts = [word_index(i, N) * size, word_index(j, N) * size]
    for a in starts:
        for b in starts:
            out[a : a + size, b : b + size] = T.num
    return RationalMatrix(out, T.den)


class Fiber:
    """Explicit matrices of one fiber: ``Q``, central projections of the
    singular blocks, designated minimal projections, and decomposition of
    projections into block multiplicities."""

    def __init__(self, spec: MapSpec, decomposition: FiberDecomposition):
        self.spec = spec
        self.decomposition = decomposition
        N, n = spec.N, decomposition.level
        self.dimension = decomposition.dimension
        groups: dict[tuple[int, ...], list[int]] = {}
        for a in range(self.dimension):
            groups.setdefault(self._endpoint_key(_word(a, N, n)), []).append(a)
        self.classes: list[tuple[int, ...]] = [tuple(g) for g in groups.values()]
        self.class_of = np.empty(self.dimension, dtype=np.int64)
        for c, members in enumerate(self.classes):
            self.class_of[list(members)] = c
        self.big_classes = [g for g in self.classes if len(g) > 1]
        # For each singular block, the index arrays of its e copies.
        self.regions: list[list[np.ndarray]] = []
        self.region_of = np.full(self.dimension, -1, dtype=np.int64)
        for k, blk in enumerate(decomposition.blocks[1:]):
            size = blk.size
            copies = []
            for j in blk.entry_indices:
                start = word_index(blk.prefix + (j,), N) * size
                copies.append(np.arange(start, start + size))
                self.region_of[start : start + size] = k
            self.regions.append(copies)
        assert len(self.classes) == decomposition.blocks[0].size

    def _endpoint_key(self, word: tuple[int, ...]) -> tuple[int, ...]:
        # Indices entering a branched point are replaced by the smallest one.
        spec = self.spec
        x = self.decomposition.point
        out = []
        for j in word:
            y = spec.image(x, j)
            if y is not None and y in spec.multiplicity:
                j = spec.entry_indices[y][0]
            out.append(j)
            x = y
        return tuple(out)

    @property
    def blocks(self) -> tuple[Block, ...]:
        return self.decomposition.blocks

    # -- construction -------------------------------------------------

    def _assemble(self, entries: list[tuple[np.ndarray, np.ndarray, Fraction]]) -> RationalMatrix:
        den = math.lcm(1, *(v.denominator for _, _, v in entries))
        out = int_zeros(self.dimension, self.dimension)
        for rows, cols, v in entries:
            out[np.ix_(rows, cols)] += v.numerator * (den // v.denominator)
        return RationalMatrix(out, den)

    def _class_entries(self, cls: Sequence[int]):
        idx = np.asarray(cls)
        return (idx, idx, Fraction(1, len(cls)))

    def _singular_entries(self, k: int, s: int):
        copies = self.regions[k]
        e = len(copies)
        out = []
        for l, rl in enumerate(copies):
            for m, rm in enumerate(copies):
                out.append((rl[[s]], rm[[s]], Fraction(int(l == m)) - Fraction(1, e)))
        return out

    @functools.cached_property
    def Q(self) -> RationalMatrix:
        return self._assemble([self._class_entries(c) for c in self.classes])

    def central(self, k: int) -> RationalMatrix:
        """Central projection of the ``k``-th singular block."""
        size = self.blocks[k + 1].size
        return self._assemble([e for s in range(size) for e in self._singular_entries(k, s)])

    @property
    def centrals(self) -> list[RationalMatrix]:
        return [self.central(k) for k in range(len(self.regions))]

    def minimal_projection(self, block: int, choice: int = 0) -> RationalMatrix:
        mults = [0] * len(self.blocks)
        mults[block] = 1
        return self.projection(mults, choice)

    def projection(self, multiplicities: Sequence[int], choice: int = 0) -> RationalMatrix:
        """Sum of designated minimal projections, ``multiplicities[k]`` of
        them in block ``k``; ``choice`` rotates which ones are used."""
        if len(multiplicities) != len(self.blocks):
            raise ShapeMismatch("one multiplicity per block expected")
        entries = []
        for k, (m, blk) in enumerate(zip(multiplicities, self.blocks)):
            if not 0 <= m <= blk.size:
                raise ValueError(f"multiplicity {m} out of range for {blk.tag}")
            for t in range(m):
                u = (choice + t) % blk.size
                if k == 0:
                    entries.append(self._class_entries(self.classes[u]))
                else:
                    entries.extend(self._singular_entries(k - 1, u))
        return self._assemble(entries)

    # -- decomposition ------------------------------------------------

    def apply_Q(self, T: RationalMatrix) -> np.ndarray:
        """Numerators of ``Q @ T`` over the denominator ``T.den * L``,
        with ``L`` the lcm of the class sizes; returns ``(num, L)``."""
        L = math.lcm(1, *(len(c) for c in self.big_classes))
        out = T.num * L
        for c in self.big_classes:
            idx = list(c)
            out[idx] = T.num[idx].sum(axis=0) * (L // len(c))
        return out, L

    def decompose(self, T: RationalMatrix, check: bool = True) -> tuple[int, ...]:
        """Block multiplicities of a projection ``T`` in the fiber algebra.

        Raises:
            NotAProjection: if ``T`` is not a symmetric idempotent.
            NotInFiberAlgebra: if ``T`` mixes blocks or breaks a block pattern.
        """
        D = self.dimension
        if T.shape != (D, D):
            raise ShapeMismatch(f"T has shape {T.shape}, expected {(D, D)}")
        if check:
            if not np.all(T.num == T.num.T):
                raise NotAProjection("matrix is not symmetric")
            if T @ T != T:
                raise NotAProjection("matrix is not idempotent")
        QT, L = self.apply_Q(T)
        R = T.num * L - QT  # (I - Q) T over den T.den * L
        if check:
            if not np.all(QT == QT.T):
                raise NotInFiberAlgebra("does not commute with the identification projection")
            reg = self.region_of
            mask = reg[:, None] != reg[None, :]
            mask |= (reg[:, None] < 0)
            if any(R[mask]):
                raise NotInFiberAlgebra("nonzero cross-term between blocks")
            for k, copies in enumerate(self.regions):
                e = len(copies)
                B00 = R[np.ix_(copies[0], copies[0])]
                for l, rl in enumerate(copies):
                    for m, rm in enumerate(copies):
                        Blm = R[np.ix_(rl, rm)]
                        if not np.all((e - 1) * Blm == (e * int(l == m) - 1) * B00):
                            raise NotInFiberAlgebra(f"block {self.blocks[k + 1].tag} breaks its pattern")
        den = T.den * L
        counts = [Fraction(sum(QT[i, i] for i in range(D)), den)]
        for k, copies in enumerate(self.regions):
            tr = sum(R[i, i] for rl in copies for i in rl)
            counts.append(Fraction(tr, den * self.blocks[k + 1].weight))
        if any(c.denominator != 1 for c in counts):
            raise NotAProjection(f"non-integral block multiplicities {counts}")
        return tuple(int(c) for c in counts)


def build_fiber(spec: MapSpec, point: Optional[Label], n: int, guard: Optional[int] = None) -> Fiber:
    """Matrices of the level-``n`` fiber at ``point`` (``None`` = generic).

    Raises:
        SizeGuardExceeded: if ``N^n`` exceeds the size guard.
    """
    spec.require(point)
    limit = size_guard(guard)
    if spec.N**n > limit:
        raise SizeGuardExceeded(f"N^n = {spec.N**n} exceeds the size guard {limit}")
    return _cached_fiber(spec, point, n)


@functools.lru_cache(maxsize=256)
def _cached_fiber(spec: MapSpec, point: Optional[Label], n: int) -> Fiber:
    return Fiber(spec, fiber_decomposition(spec, point, n))


def decompose_projection(fiber: Fiber, T: RationalMatrix) -> tuple[int, ...]:
    return fiber.decompose(T)


def minimal_projection(fiber: Fiber, block: int) -> RationalMatrix:
    return fiber.minimal_projection(block)


def diagonal_projection(size: int, r: int) -> RationalMatrix:
    """The rank-``r`` projection onto the first ``r`` coordinates."""
    out = int_zeros(size, size)
    for i in range(r):
        out[i, i] = 1
    return RationalMatrix(out)
