"""Exact dense linear algebra over Q and lattice algebra over Z.

Integer matrices are numpy arrays with ``dtype=object`` holding Python
ints, so entries never overflow.  A :class:`RationalMatrix` is an integer
numerator array over one common positive denominator, kept in lowest terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import NotInLattice, ShapeMismatch

Scalar = Union[int, Fraction]


def int_matrix(rows, cols: int | None = None) -> np.ndarray:
    """Build an object-dtype integer matrix from nested sequences."""
    rows = [list(r) for r in rows]
    if not rows:
        return np.zeros((0, cols or 0), dtype=object)
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        if len(r) != out.shape[1]:
            raise ShapeMismatch("ragged rows")
        for j, x in enumerate(r):
            out[i, j] = int(x)
    return out


def int_zeros(r: int, c: int) -> np.ndarray:
    out = np.empty((r, c), dtype=object)
    out.fill(0)
    return out


def int_identity(n: int) -> np.ndarray:
    out = int_zeros(n, n)
    for i in range(n):
        out[i, i] = 1
    return out


def _as_int_array(M) -> np.ndarray:
    if isinstance(M, RationalMatrix):
        if M.den != 1:
            raise ValueError("matrix is not integral")
        return M.num.copy()
    arr = np.asarray(M, dtype=object)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return np.vectorize(int, otypes=[object])(arr) if arr.size else arr.copy()


def _gcd_all(arr: np.ndarray) -> int:
    g = 0
    for x in arr.flat:
        g = math.gcd(g, x)
        if g == 1:
            break
    return g


class RationalMatrix:
    """Immutable exact rational matrix ``num / den``."""

    __slots__ = ("num", "den")

    def __init__(self, num, den: int = 1):
        num = np.array(num, dtype=object)
        if num.ndim != 2:
            raise ShapeMismatch("RationalMatrix needs a 2-d array")
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            num, den = -num, -den
        g = math.gcd(_gcd_all(num), den)
        if g > 1:
            num = num // g
            den //= g
        num.setflags(write=False)
        self.num = num
        self.den = den

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> "RationalMatrix":
        rows = [[Fraction(x) for x in r] for r in rows]
        if not rows:
            return cls(np.zeros((0, 0), dtype=object))
        den = math.lcm(*(x.denominator for r in rows for x in r)) if rows[0] else 1
        return cls(int_matrix([[x.numerator * (den // x.denominator) for x in r] for r in rows]), den)

    @classmethod
    def zeros(cls, r: int, c: int | None = None) -> "RationalMatrix":
        return cls(int_zeros(r, r if c is None else c))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(int_identity(n))

    @classmethod
    def diagonal(cls, entries: Sequence[Scalar]) -> "RationalMatrix":
        n = len(entries)
        rows = [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]
        return cls.from_rows(rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.num.shape

    @property
    def rows(self) -> int:
        return self.num.shape[0]

    @property
    def cols(self) -> int:
        return self.num.shape[1]

    def __getitem__(self, idx) -> Fraction:
        return Fraction(self.num[idx], self.den)

    def to_fractions(self) -> list[list[Fraction]]:
        return [[Fraction(x, self.den) for x in row] for row in self.num]

    def is_integral(self) -> bool:
        return self.den == 1

    def to_int(self) -> np.ndarray:
        if self.den != 1:
            raise ValueError("matrix is not integral")
        return self.num.copy()

    def _aligned(self, other: "RationalMatrix"):
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} vs {other.shape}")
        den = math.lcm(self.den, other.den)
        return self.num * (den // self.den), other.num * (den // other.den), den

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        a, b, den = self._aligned(other)
        return RationalMatrix(a + b, den)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        a, b, den = self._aligned(other)
        return RationalMatrix(a - b, den)

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix(-self.num, self.den)

    def scale(self, c: Scalar) -> "RationalMatrix":
        c = Fraction(c)
        return RationalMatrix(self.num * c.numerator, self.den * c.denominator)

    def __mul__(self, c: Scalar) -> "RationalMatrix":
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ShapeMismatch(f"{self.shape} @ {other.shape}")
        if self.cols == 0:
            return RationalMatrix.zeros(self.rows, other.cols)
        return RationalMatrix(self.num.dot(other.num), self.den * other.den)

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix(self.num.T.copy(), self.den)

    def trace(self) -> Fraction:
        return Fraction(sum(self.num[i, i] for i in range(min(self.shape))), self.den)

    def kron(self, other: "RationalMatrix") -> "RationalMatrix":
        return RationalMatrix(np.kron(self.num, other.num), self.den * other.den)

    def is_zero(self) -> bool:
        return not any(self.num.flat)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.den == other.den
            and bool(np.all(self.num == other.num))
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"RationalMatrix({format_matrix(self)})"


def block_diag(blocks: Sequence[RationalMatrix]) -> RationalMatrix:
    den = math.lcm(*(b.den for b in blocks))
    n = sum(b.rows for b in blocks)
    m = sum(b.cols for b in blocks)
    out = int_zeros(n, m)
    i = j = 0
    for b in blocks:
        out[i : i + b.rows, j : j + b.cols] = b.num * (den // b.den)
        i += b.rows
        j += b.cols
    return RationalMatrix(out, den)


def format_fraction(x: Scalar) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def format_matrix(M) -> str:
    if isinstance(M, RationalMatrix):
        rows = M.to_fractions()
    else:
        rows = [[Fraction(x) for x in r] for r in np.asarray(M, dtype=object)]
    return "[" + ", ".join("[" + ", ".join(format_fraction(x) for x in r) + "]" for r in rows) + "]"


def matrix_to_json(M) -> dict:
    """Serialize an integer or rational matrix with exact string entries."""
    if isinstance(M, RationalMatrix):
        rows, cols = M.shape
        entries = [format_fraction(Fraction(x, M.den)) for x in M.num.flat]
    else:
        arr = np.asarray(M, dtype=object)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        rows, cols = arr.shape
        entries = [format_fraction(x) for x in arr.flat]
    return {"rows": rows, "cols": cols, "entries": entries}


def matrix_from_json(obj: dict) -> RationalMatrix:
    rows, cols = obj["rows"], obj["cols"]
    entries = [Fraction(e) for e in obj["entries"]]
    if len(entries) != rows * cols:
        raise ShapeMismatch("entry count does not match shape")
    return RationalMatrix.from_rows(
        [entries[i * cols : (i + 1) * cols] for i in range(rows)]
    ) if rows else RationalMatrix(int_zeros(0, cols))


def rank(M) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination."""
    A = M.num.copy() if isinstance(M, RationalMatrix) else _as_int_array(M)
    A = np.array(A, dtype=object)
    rows, cols = A.shape
    r = 0
    prev = 1
    for c in range(cols):
        if r == rows:
            break
        nz = [i for i in range(r, rows) if A[i, c] != 0]
        if not nz:
            continue
        i = nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        piv = A[r, c]
        below = A[r + 1 :, c].copy()
        A[r + 1 :, c + 1 :] = (piv * A[r + 1 :, c + 1 :] - np.outer(below, A[r, c + 1 :])) // prev
        A[r + 1 :, c] = 0
        prev = piv
        r += 1
    return r


def hnf(M) -> tuple[np.ndarray, np.ndarray]:
    """Row-style Hermite normal form.

    Args:
        M: integer matrix (anything ``int_matrix`` accepts, or an object array).

    Returns:
        ``(H, U)`` with ``H = U @ M``, ``U`` unimodular.  ``H`` is in row
        echelon form with positive pivots, entries above each pivot reduced
        into ``[0, pivot)``, and zero rows last.
    """
    H = _as_int_array(M)
    rows, cols = H.shape
    U = int_identity(rows)
    r = 0
    pivots = []
    for c in range(cols):
        if r == rows:
            break
        # Euclid on column c among rows r.. until one nonzero remains.
        while True:
            nz = [i for i in range(r, rows) if H[i, c] != 0]
            if not nz:
                break
            i = min(nz, key=lambda k: abs(H[k, c]))
            if i != r:
                H[[r, i]] = H[[i, r]]
                U[[r, i]] = U[[i, r]]
            done = True
            for k in range(r + 1, rows):
                if H[k, c] != 0:
                    q = H[k, c] // H[r, c]
                    H[k] = H[k] - q * H[r]
                    U[k] = U[k] - q * U[r]
                    if H[k, c] != 0:
                        done = False
            if done:
                break
        if H[r, c] == 0:
            continue
        if H[r, c] < 0:
            H[r] = -H[r]
            U[r] = -U[r]
        for k in range(r):
            q = H[k, c] // H[r, c]
            if q:
                H[k] = H[k] - q * H[r]
                U[k] = U[k] - q * U[r]
        pivots.append(c)
        r += 1
    return H, U


def det(M) -> int:
    """Determinant of a square integer matrix (Bareiss)."""
    A = _as_int_array(M)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ShapeMismatch("determinant needs a square matrix")
    sign = 1
    prev = 1
    for k in range(n):
        nz = [i for i in range(k, n) if A[i, k] != 0]
        if not nz:
            return 0
        if nz[0] != k:
            A[[k, nz[0]]] = A[[nz[0], k]]
            sign = -sign
        piv = A[k, k]
        A[k + 1 :, k + 1 :] = (piv * A[k + 1 :, k + 1 :] - np.outer(A[k + 1 :, k], A[k, k + 1 :])) // prev
        prev = piv
    return sign * (A[n - 1, n - 1] if n else 1)


def snf(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smith normal form ``S = U @ M @ V`` with ``d_i | d_{i+1}``, ``d_i >= 0``."""
    S = _as_int_array(M)
    rows, cols = S.shape
    U = int_identity(rows)
    V = int_identity(cols)
    t = 0
    while t < min(rows, cols):
        nz = [(i, j) for i in range(t, rows) for j in range(t, cols) if S[i, j] != 0]
        if not nz:
            break
        i, j = min(nz, key=lambda ij: abs(S[ij]))
        S[[t, i]] = S[[i, t]]
        U[[t, i]] = U[[i, t]]
        S[:, [t, j]] = S[:, [j, t]]
        V[:, [t, j]] = V[:, [j, t]]
        clean = True
        for k in range(t + 1, rows):
            q = S[k, t] // S[t, t]
            if q:
                S[k] = S[k] - q * S[t]
                U[k] = U[k] - q * U[t]
            clean &= S[k, t] == 0
        for k in range(t + 1, cols):
            q = S[t, k] // S[t, t]
            if q:
                S[:, k] = S[:, k] - q * S[:, t]
                V[:, k] = V[:, k] - q * V[:, t]
            clean &= S[t, k] == 0
        if not clean:
            continue
        bad = [
            (i, j)
            for i in range(t + 1, rows)
            for j in range(t + 1, cols)
            if S[i, j] % S[t, t] != 0
        ]
        if bad:
            i = bad[0][0]
            S[t] = S[t] + S[i]
            U[t] = U[t] + U[i]
            continue
        if S[t, t] < 0:
            S[t] = -S[t]
            U[t] = -U[t]
        t += 1
    return S, U, V


@dataclass(frozen=True)
class Lattice:
    """Subgroup of ``Z^ambient_dim`` with an HNF row basis."""

    ambient_dim: int
    basis: np.ndarray

    @classmethod
    def from_generators(cls, gens, ambient_dim: int) -> "Lattice":
        gens = _as_int_array(gens) if len(gens) else int_zeros(0, ambient_dim)
        if gens.shape[0] == 0:
            return cls(ambient_dim, int_zeros(0, ambient_dim))
        H, _ = hnf(gens)
        keep = [i for i in range(H.shape[0]) if any(H[i])]
        return cls(ambient_dim, H[keep])

    @classmethod
    def standard(cls, n: int) -> "Lattice":
        return cls(n, int_identity(n))

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    def contains(self, v) -> bool:
        try:
            solve_in_lattice(self, v)
        except NotInLattice:
            return False
        return True

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lattice)
            and self.ambient_dim == other.ambient_dim
            and self.basis.shape == other.basis.shape
            and bool(np.all(self.basis == other.basis))
        )

    __hash__ = None


def kernel_basis(M) -> Lattice:
    """Integer kernel ``{v : M v = 0}`` as a Lattice in HNF."""
    A = _as_int_array(M)
    rows, cols = A.shape
    if rows == 0:
        return Lattice.standard(cols)
    H, U = hnf(A.T)
    zero_rows = [i for i in range(cols) if not any(H[i])]
    return Lattice.from_generators(U[zero_rows], cols)


def solve_in_lattice(L: Lattice, v) -> list[int]:
    """Integer coordinates ``x`` with ``x @ L.basis == v``.

    Raises:
        NotInLattice: if ``v`` is outside the subgroup.
    """
    vec = [Fraction(x) for x in (v.flat if isinstance(v, np.ndarray) else v)]
    if len(vec) != L.ambient_dim:
        raise ShapeMismatch(f"vector of length {len(vec)} for ambient dimension {L.ambient_dim}")
    if any(x.denominator != 1 for x in vec):
        raise NotInLattice(f"{[format_fraction(x) for x in vec]} is not integral")
    rem = [int(x) for x in vec]
    coords = []
    for row in L.basis:
        c = next(j for j in range(L.ambient_dim) if row[j] != 0)
        q, r = divmod(rem[c], row[c])
        if r:
            raise NotInLattice(f"{vec} not in lattice")
        coords.append(q)
        rem = [a - q * b for a, b in zip(rem, row)]
    if any(rem):
        raise NotInLattice(f"{[int(x) for x in vec]} not in lattice")
    return coords


def rational_solve(A, b) -> list[Fraction] | None:
    """Unique rational solution ``x`` of ``x @ A = b`` (rows of ``A`` as
    generators), or ``None`` when there is no solution.  ``A`` must have
    independent rows."""
    rows = [[Fraction(x) for x in r] for r in (A.to_fractions() if isinstance(A, RationalMatrix) else A)]
    k = len(rows)
    m = len(b)
    # Solve A^T x = b by Gauss-Jordan on the augmented system.
    aug = [[rows[i][j] for i in range(k)] + [Fraction(b[j])] for j in range(m)]
    piv_cols = []
    r = 0
    for c in range(k):
        p = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        pv = aug[r][c]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    if any(aug[i][k] != 0 for i in range(r, m)):
        return None
    if len(piv_cols) != k:
        raise ValueError("generators are dependent")
    x = [Fraction(0)] * k
    for i, c in enumerate(piv_cols):
        x[c] = aug[i][k]
    return x


def inverse(M: RationalMatrix) -> RationalMatrix:
    n = M.rows
    aug = [r + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(M.to_fractions())]
    for c in range(n):
        p = next((i for i in range(c, n) if aug[i][c] != 0), None)
        if p is None:
            raise ZeroDivisionError("singular matrix")
        aug[c], aug[p] = aug[p], aug[c]
        pv = aug[c][c]
        aug[c] = [x / pv for x in aug[c]]
        for i in range(n):
            if i != c and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[c])]
    return RationalMatrix.from_rows([r[n:] for r in aug])


def projection_onto(vectors: Sequence[Sequence[Scalar]]) -> RationalMatrix:
    """Orthogonal projection onto the span of independent rational vectors."""
    V = RationalMatrix.from_rows(vectors).T
    return V @ inverse(V.T @ V) @ V.T
