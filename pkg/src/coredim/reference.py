"""Hand-written bases, closed-form inclusion matrices and K1 facts for the
built-in maps.

Tent map, level ``n``: at ``x = 1`` the coordinates are ``(m1, m2)`` =
(singular, compact); at ``x = 0`` coordinate ``r_i`` is the block
``C(0, half, i+1)`` for ``i < n`` and ``r_n`` is the compact block.  The basis
is ``e_i = ((1,0), u_i)`` for ``i <= n`` and ``e_{n+1} = ((0,1), u_1)``.

Gasket, level ``n``: at each vertex index ``i <= n`` is the singular block
entered after ``i`` steps and ``n+1`` the compact block.  With the vertex
slots ``(P, X, Y)`` the basis is ``a_i = (u_i, u_{n+1}, u_{n+1})``,
``b_i = (u_1, u_i, u_{n+1})``, ``c_i = (u_1, u_{n+1}, u_i)``.  The slot ``X``
is the vertex among ``Q, R`` whose deepest singular block sits over ``S``
(``Q`` for odd ``n``, ``R`` for even ``n``); ``slots="fixed"`` keeps ``X = Q``.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .dimension import K0Presentation, inclusion_matrix, k0_finite
from .errors import NotInLattice
from .exact import int_matrix, int_zeros, rational_solve
from .mapspec import MapSpec


def _tent_basis(n: int) -> list[list[int]]:
    pres = k0_finite(_tent(), n)
    if n == 0:
        return [[1]]

    def vec(m1: int, m2: int, i: int) -> list[int]:
        v = [0] * pres.ambient_dim
        one = pres.point_slice("1")
        v[one.start] = m2  # compact
        v[one.start + 1] = m1  # C(1, half, 1)
        if "0" in pres.points:
            if i < n:
                v[pres.block_index("0", "half", i + 1)] = 1
            else:
                v[pres.point_slice("0").start] = 1
        return v

    return [vec(1, 0, i) for i in range(1, n + 1)] + [vec(0, 1, 1)]


def _gasket_slots(n: int, slots: str) -> tuple[str, str, str]:
    if slots == "fixed":
        return ("P", "Q", "R")
    pres = k0_finite(_gasket(), n)
    x = "Q" if pres.block_index("Q", "S", n) is not None else "R"
    return ("P", x, "R" if x == "Q" else "Q")


def _gasket_basis(n: int, slots: str = "tagged") -> list[list[int]]:
    pres = k0_finite(_gasket(), n)
    if n == 0:
        return [[1]]
    order = _gasket_slots(n, slots)

    def unit(point: str, i: int) -> list[tuple[int, int]]:
        sl = pres.point_slice(point)
        if i <= n:
            return [(sl.start + i, 1)]  # blocks after the compact one are p = 1..n
        return [(sl.start, 1)]

    def vec(idx: tuple[int, int, int]) -> list[int]:
        v = [0] * pres.ambient_dim
        for point, i in zip(order, idx):
            for k, x in unit(point, i):
                v[k] += x
        return v

    a = [vec((i, n + 1, n + 1)) for i in range(1, n + 2)]
    b = [vec((1, i, n + 1)) for i in range(1, n + 1)]
    c = [vec((1, n + 1, i)) for i in range(1, n + 1)]
    return a + b + c


def _tent() -> MapSpec:
    from .mapspec import builtin

    return builtin("tent")


def _gasket() -> MapSpec:
    from .mapspec import builtin

    return builtin("gasket")


def reference_basis(spec: MapSpec, n: int, slots: str = "tagged") -> Optional[list[list[int]]]:
    """Raw coordinates of the hand-written basis at level ``n``, or ``None``
    for maps without one."""
    if spec == _tent():
        return _tent_basis(n)
    if spec == _gasket():
        return _gasket_basis(n, slots)
    if spec.name == "fullshift2" and not spec.branched:
        return [[1]]
    return None


def reference_labels(spec: MapSpec, n: int) -> Optional[list[str]]:
    if spec == _tent():
        return [f"e{i}" for i in range(1, n + 2)] if n else ["1"]
    if spec == _gasket():
        if n == 0:
            return ["1"]
        return ([f"a{i}" for i in range(1, n + 2)] + [f"b{i}" for i in range(1, n + 1)]
                + [f"c{i}" for i in range(1, n + 1)])
    if spec.name == "fullshift2" and not spec.branched:
        return ["1"]
    return None


def express(rows: list[list[int]], v: list[int]) -> list[int]:
    """Integer coordinates of ``v`` in the basis ``rows``."""
    x = rational_solve(rows, v)
    if x is None or any(c.denominator != 1 for c in x):
        raise NotInLattice(f"{v} is not an integer combination of the basis")
    return [int(c) for c in x]


def matrix_in_basis(spec: MapSpec, n: int, kind: str = "inclusion",
                    slots: str = "tagged") -> Optional[np.ndarray]:
    """Inclusion (or beta) matrix from level ``n`` to ``n+1`` written in the
    hand-written bases."""
    from .dimension import push_class

    dom = reference_basis(spec, n, slots)
    cod = reference_basis(spec, n + 1, slots)
    if dom is None or cod is None:
        return None
    cols = [express(cod, push_class(spec, n, v, kind)) for v in dom]
    return int_matrix(list(zip(*cols)))


def tent_closed_form(n: int) -> np.ndarray:
    """The classical ``(n+2) x (n+1)`` tent inclusion matrix: first row
    ``(0,...,0,-1)``, identity on the subdiagonal, row ``n+1`` ending in
    ``2``, last row all ones."""
    A = int_zeros(n + 2, n + 1)
    A[0, n] = -1
    for i in range(n):
        A[i + 1, i] = 1
    A[n, n] = 2
    A[n + 1, :] = 1
    return A


def tent_derived_form(n: int) -> np.ndarray:
    """Tent inclusion matrix in the same basis as computed from the fibers:
    it differs from :func:`tent_closed_form` only in the last column,
    which is ``-e_1 + e_2 + e_{n+1} + e_{n+2}`` (for ``n >= 2``)."""
    A = tent_closed_form(n)
    if n >= 2:
        A[:, n] = 0
        A[0, n] = -1
        A[1, n] = 1
        A[n, n] = 1
        A[n + 1, n] = 1
    return A


def gasket_closed_form(n: int) -> np.ndarray:
    """The ``(3n+4) x (3n+1)`` gasket inclusion matrix in block form."""
    rows, cols = 3 * n + 4, 3 * n + 1
    B = int_zeros(rows, cols)
    a, b, c = slice(0, n), slice(n + 1, 2 * n + 1), slice(2 * n + 1, 3 * n + 1)
    B[0, a] = -1
    B[0, n] = -1
    B[0, b] = -2
    B[0, c] = -2
    for i in range(n):
        B[1 + i, i] = 1
    B[1, b] = 1
    B[1, c] = 1
    B[n + 1, :] = 1
    B[n + 1, n] = 2
    B[n + 2, :] = 1
    for i in range(n):
        B[n + 3 + i, n + 1 + i] = 1
    B[2 * n + 3, :] = 1
    for i in range(n):
        B[2 * n + 4 + i, 2 * n + 1 + i] = 1
    return B


GASKET_B34 = int_matrix([
    [-1, -1, -1, -1, -2, -2, -2, -2, -2, -2],
    [1, 0, 0, 0, 1, 1, 1, 1, 1, 1],
    [0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 1, 1, 2, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [0, 0, 0, 0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [0, 0, 0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
])


def closed_form(spec: MapSpec, n: int) -> Optional[np.ndarray]:
    if n < 1:
        return None
    if spec == _tent():
        return tent_closed_form(n)
    if spec == _gasket():
        return gasket_closed_form(n)
    return None


def reference_inclusion(spec: MapSpec, n: int) -> Optional[dict]:
    """Inclusion matrix in the hand-written basis with a comparison
    against the closed form, for the built-in maps."""
    mat = matrix_in_basis(spec, n)
    if mat is None:
        return None
    expected = closed_form(spec, n)
    return {
        "labels_domain": reference_labels(spec, n),
        "labels_codomain": reference_labels(spec, n + 1),
        "matrix": mat,
        "closed_form": expected,
        "matches_closed_form": None if expected is None else bool(
            expected.shape == mat.shape and np.all(expected == mat)),
    }


K1_FACTS = {
    "tent": {
        "status": "known",
        "statement": "K1(F_n) = 0 for every n, hence K1(F_inf) = 0",
        "reason": "the exponential map of the six-term sequence for the "
                  "interval base is onto the K0 obstruction group",
    },
    "gasket": {
        "status": "known",
        "statement": "K1(F_inf) = Z^inf, with K1(F_n) = K1(S) and identity inclusions",
        "reason": "K1 of the finite cores agrees with K1 of the gasket, "
                  "which is free of countably infinite rank",
    },
    "fullshift2": {
        "status": "known",
        "statement": "K1(F_inf) = 0",
        "reason": "the core is the UHF algebra of type 2^inf",
    },
}


def k1_metadata(spec: MapSpec) -> dict:
    """Recorded K1 facts for the built-in maps; ``Unknown`` otherwise."""
    from .mapspec import BUILTIN_SOURCES, builtin

    if spec.name in K1_FACTS and spec.name in BUILTIN_SOURCES and spec == builtin(spec.name):
        return dict(K1_FACTS[spec.name])
    return {"status": "Unknown", "statement": None, "reason": None}
