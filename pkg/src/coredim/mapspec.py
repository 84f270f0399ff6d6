"""Combinatorial data of a self-similar map: parsing, validation, orbits.

A map is given by its branch count ``N`` and, for each special point ``x``,
the partial table ``j -> gamma_j(x)``.  Indices missing from a table send
``x`` to a generic point outside the special set.  Everything else (the
expanding map ``h``, branched points, branch values, postcritical set) is
derived here.

Generic points are represented by ``None`` wherever a label is accepted.
"""

from __future__ import annotations

import itertools
import os
import sys
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

from .errors import Diagnostic, LevelZero, SpecValidationError, UnknownPoint

Label = str

BUILTIN_SOURCES: dict[str, str] = {
    # Tent map on [0, 1]: gamma_0(y) = y/2, gamma_1(y) = 1 - y/2.
    "tent": """
branch_count = 2
points = ["0", "1", "half"]

[gamma."0"]
0 = "0"
1 = "1"

[gamma."1"]
0 = "half"
1 = "half"
""",
    # Sierpinski gasket with vertices P, Q, R and edge midpoints S, T, U;
    # the contractions are composed with rotations so that the expanding
    # map is continuous.
    "gasket": """
branch_count = 3
points = ["P", "Q", "R", "S", "T", "U"]

[gamma.P]
0 = "P"
1 = "T"
2 = "T"

[gamma.Q]
0 = "S"
1 = "S"
2 = "R"

[gamma.R]
0 = "U"
1 = "Q"
2 = "U"
""",
    # Doubling map on the circle: no branched points at all.
    "fullshift2": """
branch_count = 2
points = ["0"]

[gamma."0"]
0 = "0"
""",
}


@dataclass(frozen=True)
class MapSpec:
    """A validated map together with all derived combinatorial sets.

    Instances are immutable and hashable, so they can key caches.
    """

    name: str
    branch_count: int
    points: tuple[Label, ...]
    gamma: tuple[tuple[Label, tuple[tuple[int, Label], ...]], ...]
    h: Mapping[Label, Label] = field(compare=False, hash=False, repr=False)
    branched: tuple[Label, ...] = field(compare=False, hash=False)
    multiplicity: Mapping[Label, int] = field(compare=False, hash=False, repr=False)
    entry_indices: Mapping[Label, tuple[int, ...]] = field(
        compare=False, hash=False, repr=False
    )
    branch_values: tuple[Label, ...] = field(compare=False, hash=False)
    postcritical: tuple[Label, ...] = field(compare=False, hash=False)

    @property
    def N(self) -> int:
        return self.branch_count

    def image(self, x: Optional[Label], j: int) -> Optional[Label]:
        """``gamma_j(x)``; ``None`` stands for a generic point."""
        if x is None:
            return None
        return self._tables[x].get(j)

    def table(self, x: Label) -> dict[int, Label]:
        self.require(x)
        return dict(self._tables[x])

    @property
    def _tables(self) -> dict[Label, dict[int, Label]]:
        cached = self.__dict__.get("_tables_cache")
        if cached is None:
            cached = {x: {} for x in self.points}
            for x, pairs in self.gamma:
                cached[x] = dict(pairs)
            object.__setattr__(self, "_tables_cache", cached)
        return cached

    def require(self, x: Optional[Label]) -> None:
        if x is not None and x not in self.h:
            raise UnknownPoint(f"unknown point {x!r}")

    def preimages(self, x: Label) -> list[Label]:
        """Special points ``y`` with ``h(y) = x``, in declaration order."""
        return [y for y in self.points if self.h[y] == x]

    def used(self, x: Label) -> int:
        """Number of indices ``j`` for which ``gamma_j(x)`` is special."""
        return len(self._tables[x])


def _parse_index(key, src: str, n: int, diags: list[Diagnostic]) -> Optional[int]:
    try:
        j = int(key)
    except (TypeError, ValueError):
        diags.append(Diagnostic("IndexOutOfRange", f"gamma.{src}: index {key!r} is not an integer"))
        return None
    if not 0 <= j < n:
        diags.append(Diagnostic("IndexOutOfRange", f"gamma.{src}: index {j} not in 0..{n - 1}"))
        return None
    return j


def validate(raw: Mapping, name: str = "<spec>") -> MapSpec:
    """Validate parsed spec fields and derive ``h``, ``B``, ``C`` and ``P``.

    Raises:
        SpecValidationError: carrying every violated invariant.
    """
    diags: list[Diagnostic] = []
    n = raw.get("branch_count")
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        diags.append(Diagnostic("BadBranchCount", f"branch_count must be an integer >= 2, got {n!r}"))
        n = None

    points_raw = raw.get("points")
    if not isinstance(points_raw, list) or not all(isinstance(p, str) for p in points_raw):
        diags.append(Diagnostic("BadPoints", "points must be a list of strings"))
        points_raw = []
    points: list[Label] = []
    for p in points_raw:
        if p in points:
            diags.append(Diagnostic("DuplicatePoint", f"point {p!r} listed twice"))
        else:
            points.append(p)
    known = set(points)

    gamma_raw = raw.get("gamma", {})
    if not isinstance(gamma_raw, Mapping):
        diags.append(Diagnostic("BadGamma", "gamma must be a table of tables"))
        gamma_raw = {}

    tables: dict[Label, dict[int, Label]] = {}
    for src, tab in gamma_raw.items():
        if src not in known:
            diags.append(Diagnostic("UnknownPoint", f"gamma.{src}: source is not a listed point"))
            continue
        if not isinstance(tab, Mapping):
            diags.append(Diagnostic("BadGamma", f"gamma.{src} must be a table"))
            continue
        out: dict[int, Label] = {}
        for key, tgt in tab.items():
            j = _parse_index(key, src, n or 0, diags) if n else None
            if j is None:
                continue
            if not isinstance(tgt, str) or tgt not in known:
                diags.append(Diagnostic("UnknownPoint", f"gamma.{src}.{j}: target {tgt!r} is not a listed point"))
                continue
            out[j] = tgt
        tables[src] = dict(sorted(out.items()))

    sources: dict[Label, list[Label]] = {p: [] for p in points}
    indices: dict[Label, list[int]] = {p: [] for p in points}
    for src in points:
        for j, tgt in tables.get(src, {}).items():
            if src not in sources[tgt]:
                sources[tgt].append(src)
            indices[tgt].append(j)
    h: dict[Label, Label] = {}
    for y in points:
        if len(sources[y]) > 1:
            diags.append(Diagnostic("DuplicateTarget", f"{y!r} is a target of {sources[y]}"))
        elif not sources[y]:
            diags.append(Diagnostic("OrphanPoint", f"{y!r} is never a gamma target"))
        else:
            h[y] = sources[y][0]

    branched = tuple(y for y in points if len(indices[y]) >= 2)
    branch_values: list[Label] = []
    postcritical: list[Label] = []
    if len(h) == len(points):
        for b in branched:
            if h[b] not in branch_values:
                branch_values.append(h[b])
        # Forward orbits of the branched points; finite since S is finite.
        frontier = list(branch_values)
        while frontier:
            x = frontier.pop(0)
            if x in postcritical:
                continue
            postcritical.append(x)
            frontier.append(h[x])
        for b in branched:
            if b in postcritical:
                diags.append(Diagnostic("BranchOnPostcritical", f"branched point {b!r} lies in the postcritical set"))

    if diags:
        raise SpecValidationError(diags)

    return MapSpec(
        name=name,
        branch_count=n,
        points=tuple(points),
        gamma=tuple((x, tuple(tables.get(x, {}).items())) for x in points),
        h=dict(h),
        branched=branched,
        multiplicity={b: len(indices[b]) for b in branched},
        entry_indices={b: tuple(sorted(indices[b])) for b in branched},
        branch_values=tuple(branch_values),
        postcritical=tuple(postcritical),
    )


def parse_spec_text(text: str, name: str = "<spec>") -> MapSpec:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecValidationError([Diagnostic("ParseError", str(exc))]) from None
    return validate(raw, name=name)


def load_spec(source: str) -> MapSpec:
    """Resolve a built-in name or read a spec file."""
    if source in BUILTIN_SOURCES:
        return builtin(source)
    with open(source, encoding="utf-8") as fh:
        text = fh.read()
    return parse_spec_text(text, name=os.path.basename(source))


_BUILTIN_CACHE: dict[str, MapSpec] = {}


def builtin(name: str) -> MapSpec:
    if name not in _BUILTIN_CACHE:
        _BUILTIN_CACHE[name] = parse_spec_text(BUILTIN_SOURCES[name], name=name)
    return _BUILTIN_CACHE[name]


def h_iterate(spec: MapSpec, x: Label, k: int) -> Label:
    spec.require(x)
    if x is None:
        raise UnknownPoint("generic points have no special h-image")
    for _ in range(k):
        x = spec.h[x]
    return x


def singular_points(spec: MapSpec, n: int) -> tuple[Label, ...]:
    """Points whose level-``n`` fiber is not a full matrix algebra."""
    out: list[Label] = []
    for p in range(1, n + 1):
        for b in spec.branched:
            x = h_iterate(spec, b, p)
            if x not in out:
                out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class BranchSets:
    level: int
    count: int
    singular: tuple[Label, ...]
    words: tuple[tuple[tuple[int, ...], Label], ...]


def level_branch_counts(spec: MapSpec, n: int) -> BranchSets:
    """Branched points and branch values of the ``n``-fold composition.

    Branched points are the formal images ``gamma_w(b)`` for words ``w`` of
    length below ``n``; distinct pairs ``(w, b)`` are counted as distinct
    points (valid under genericity).
    """
    if n < 1:
        raise LevelZero("level must be >= 1")
    words = tuple(
        (w, b)
        for k in range(n)
        for w in itertools.product(range(spec.N), repeat=k)
        for b in spec.branched
    )
    singular = singular_points(spec, n)
    assert set(singular) <= set(singular_points(spec, n + 1))
    return BranchSets(level=n, count=len(words), singular=singular, words=words)


@dataclass(frozen=True)
class PQOrbit:
    """Backward orbits from ``start`` entering the branched point ``base``
    after ``p`` steps, followed by ``q`` free steps."""

    start: Label
    base_point: Label
    p: int
    q: int
    path: tuple[Label, ...]
    prefix_word: tuple[int, ...]
    entry_indices: tuple[int, ...]
    branch_count: int

    @property
    def count(self) -> int:
        return len(self.entry_indices) * self.branch_count**self.q

    def suffix_words(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.branch_count), repeat=self.q)

    def words(self) -> Iterator[tuple[int, ...]]:
        for j in self.entry_indices:
            for s in self.suffix_words():
                yield self.prefix_word + (j,) + s


def orbit_path(spec: MapSpec, base: Label, p: int) -> tuple[tuple[Label, ...], tuple[int, ...]]:
    """Points ``h^p(base), ..., h(base), base`` and the index word joining
    ``h^p(base)`` to ``h(base)``."""
    path = tuple(h_iterate(spec, base, p - k) for k in range(p + 1))
    prefix = []
    for a, b in zip(path[:-2], path[1:-1]):
        (j,) = [j for j, t in spec.table(a).items() if t == b]
        prefix.append(j)
    return path, tuple(prefix)


def pq_orbits(spec: MapSpec, start: Label, p: int, q: int) -> tuple[PQOrbit, ...]:
    spec.require(start)
    if p < 1 or q < 0:
        raise ValueError("need p >= 1 and q >= 0")
    out = []
    for b in spec.branched:
        if h_iterate(spec, b, p) != start:
            continue
        path, prefix = orbit_path(spec, b, p)
        assert not set(path[1:-1]) & set(spec.branched)
        orbit = PQOrbit(start, b, p, q, path, prefix, spec.entry_indices[b], spec.N)
        assert sum(1 for _ in orbit.words()) == spec.multiplicity[b] * spec.N**q
        out.append(orbit)
    return tuple(out)


def backward_count(spec: MapSpec, x: Optional[Label], n: int) -> int:
    """Number of distinct endpoints of length-``n`` backward words from ``x``."""
    spec.require(x)
    if n < 0:
        raise ValueError("n must be >= 0")
    memo: dict[tuple[Label, int], int] = {}

    def d(y: Optional[Label], k: int) -> int:
        if y is None or k == 0:
            return spec.N**k
        key = (y, k)
        if key not in memo:
            total = sum(d(z, k - 1) for z in spec.preimages(y))
            memo[key] = total + (spec.N - spec.used(y)) * spec.N ** (k - 1)
        return memo[key]

    return d(x, n)


def word_index(word: Sequence[int], N: int) -> int:
    """N-adic value of a word, first letter most significant."""
    v = 0
    for j in word:
        v = v * N + j
    return v
