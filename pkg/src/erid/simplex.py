"""Probability-simplex values shared by every other module."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


class DegenerateInputError(ValueError):
    """Raised when a vector has no positive mass left to renormalize."""


@dataclass(frozen=True)
class SimplexVector:
    """A probability distribution over ``M >= 2`` actions.

    The constructor validates and never repairs; use :func:`project_to_simplex`
    to fix numerical drift explicitly.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1:
            raise ValueError(f"simplex vector must be one-dimensional, got shape {p.shape}")
        if p.size < 2:
            raise ValueError(f"simplex vector needs at least 2 entries, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise ValueError(f"simplex vector has non-finite entries: {p}")
        if np.any(p < 0):
            raise ValueError(f"simplex vector has negative entries: {p}")
        if abs(p.sum() - 1.0) >= SIMPLEX_TOL:
            raise ValueError(f"simplex vector sums to {p.sum()!r}, not 1")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, m: int) -> "SimplexVector":
        return cls(np.full(m, 1.0 / m))

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i):
        return self.probs[i]

    def __iter__(self) -> Iterator[float]:
        return iter(self.probs.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplexVector):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash(self.probs.tobytes())

    def __repr__(self) -> str:
        return f"SimplexVector({self.probs.tolist()})"


@dataclass(frozen=True)
class PolicyProfile:
    """Mixed strategies of the two players."""

    player1: SimplexVector
    player2: SimplexVector

    def __post_init__(self):
        for name in ("player1", "player2"):
            value = getattr(self, name)
            if not isinstance(value, SimplexVector):
                object.__setattr__(self, name, SimplexVector(value))

    def __iter__(self):
        return iter((self.player1, self.player2))

    def __getitem__(self, k: int) -> SimplexVector:
        return (self.player1, self.player2)[k]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.player1), len(self.player2)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.player1.probs, self.player2.probs


def as_simplex(v) -> SimplexVector:
    return v if isinstance(v, SimplexVector) else SimplexVector(v)


def as_profile(p) -> PolicyProfile:
    if isinstance(p, PolicyProfile):
        return p
    x, y = p
    return PolicyProfile(as_simplex(x), as_simplex(y))


def project_to_simplex(v: Sequence[float]) -> SimplexVector:
    """Clip negative entries to zero and renormalize.

    >>> project_to_simplex([-0.1, 0.6, 0.6])
    SimplexVector([0.0, 0.5, 0.5])
    """
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.size < 2:
        raise ValueError(f"need at least 2 entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DegenerateInputError(f"non-finite entries: {arr}")
    clipped = np.maximum(arr, 0.0)
    total = clipped.sum()
    if total <= 0.0:
        raise DegenerateInputError(f"no positive mass to project: {arr}")
    return SimplexVector(clipped / total)


def simplex_distance(a, b) -> float:
    """Max-norm distance between two distributions of equal dimension."""
    pa = np.asarray(a, dtype=float)
    pb = np.asarray(b, dtype=float)
    if pa.shape != pb.shape:
        raise ValueError(f"dimension mismatch: {pa.shape} vs {pb.shape}")
    return float(np.max(np.abs(pa - pb)))


def profile_distance(p, q) -> float:
    """Max-norm distance between two policy profiles (worst player, worst action)."""
    p, q = as_profile(p), as_profile(q)
    return max(simplex_distance(p.player1, q.player1), simplex_distance(p.player2, q.player2))
