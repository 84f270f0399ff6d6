"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

from dataclasses import dataclass


class CoreDimError(Exception):
    """Base class; the CLI reports ``type(err).__name__`` verbatim."""


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


class SpecValidationError(CoreDimError):
    """A map specification violates one or more invariants.

    ``diagnostics`` holds every violation found, not just the first.
    """

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class UnknownPoint(CoreDimError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class LevelZero(CoreDimError, ValueError):
    pass


class ShapeMismatch(CoreDimError, ValueError):
    pass


class DuplicatePosition(CoreDimError, ValueError):
    pass


class SizeGuardExceeded(CoreDimError):
    pass


class NotAProjection(CoreDimError, ValueError):
    pass


class NotInFiberAlgebra(CoreDimError, ValueError):
    pass


class NotInLattice(CoreDimError, ValueError):
    pass


class NegativeEntry(CoreDimError, ValueError):
    pass


class RankMismatch(CoreDimError, ValueError):
    pass
