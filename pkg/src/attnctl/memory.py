"""Capacity-bounded working memory and the comparison primitive."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .clock import SimClock, tick


class DegenerateComparison(ValueError):
    """A zero vector was compared; the percept failed."""


@dataclass(frozen=True, eq=False)
class WmEntry:
    key: str
    representation: np.ndarray
    stored_at: int

    def __eq__(self, other):
        return (
            isinstance(other, WmEntry)
            and (self.key, self.stored_at) == (other.key, other.stored_at)
            and np.array_equal(self.representation, other.representation)
        )


@dataclass
class WorkingMemory:
    capacity: int = 7
    entries: dict[str, WmEntry] = field(default_factory=dict)
    _seq: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def keys(self) -> list[str]:
        return list(self.entries)

    def store(self, key: str, representation, clock: SimClock | None = None) -> "WorkingMemory":
        """Insert or overwrite; at capacity the oldest entry is evicted first.

        Overwriting refreshes the entry's age.  Costs one cycle.
        """
        rep = np.array(representation, dtype=float, copy=True).ravel()
        if not np.all(np.isfinite(rep)):
            raise ValueError("working-memory representations must be finite")
        rep.setflags(write=False)
        tick(clock, 1)
        t = clock.t if clock is not None else self._seq
        self.entries.pop(key, None)
        while len(self.entries) >= self.capacity:
            oldest = next(iter(self.entries))
            del self.entries[oldest]
        self.entries[key] = WmEntry(key, rep, t)
        self._seq += 1
        return self

    def recall(self, key: str, clock: SimClock | None = None) -> np.ndarray | None:
        """Exact-key lookup; ``None`` when absent.  Costs one cycle."""
        tick(clock, 1)
        e = self.entries.get(key)
        return None if e is None else e.representation


class MatchResult(NamedTuple):
    same: bool
    score: float


def match(a, b, tau: float = 0.1) -> MatchResult:
    """Cosine comparison; ``same`` iff similarity >= 1 - tau."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"cannot compare vectors of length {a.size} and {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateComparison("degenerate comparison: zero vector")
    score = float(np.dot(a, b) / (na * nb))
    score = min(1.0, max(-1.0, score))
    return MatchResult(score >= 1.0 - tau, score)


class DegeneratePercept(ValueError):
    """Decision time requested for a zero response."""


def decision_cycles(rho: float, k: float = 1.0) -> int:
    """ceil(k / rho) cycles to reach a decision on a percept of strength ``rho``.

    The quotient is rounded to 9 decimals before the ceiling so that
    representation noise (k / 0.25 == 4.000000000000001) does not add a cycle.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not rho > 0:
        raise DegeneratePercept(f"degenerate percept: response strength {rho}")
    return max(1, math.ceil(round(k / rho, 9)))
