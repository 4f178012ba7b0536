"""Finite unions of disjoint open intervals on the extended real line.

All intervals are open; endpoint membership resolves to "outside".  Unions
are kept in a canonical form (sorted, disjoint, tiny gaps merged) so that
equal point sets compare equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Tuple

INF = math.inf

# Gaps narrower than MERGE_REL * max(1, |endpoint|) are floating-point
# slivers left over from intersecting many comparison sets; merge them.
MERGE_REL = 1e-12


def _merge_tol(a: float, b: float) -> float:
    return MERGE_REL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class IntervalUnion:
    """Canonical union of open intervals ``(lo, hi)`` with ``lo < hi``.

    Construct through :func:`interval_union` (or the helpers below), which
    canonicalize; the raw constructor trusts its input.
    """

    intervals: Tuple[Tuple[float, float], ...]

    def __iter__(self) -> Iterator[Tuple[float, float]]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_full_line(self) -> bool:
        return self.intervals == ((-INF, INF),)

    @property
    def infimum(self) -> float:
        if not self.intervals:
            raise ValueError("empty union has no infimum")
        return self.intervals[0][0]

    @property
    def supremum(self) -> float:
        if not self.intervals:
            raise ValueError("empty union has no supremum")
        return self.intervals[-1][1]

    @property
    def total_length(self) -> float:
        """Lebesgue measure of the union; ``inf`` if any piece is unbounded."""
        return sum(hi - lo for lo, hi in self.intervals)

    def contains(self, t: float) -> bool:
        """Strict interior membership (endpoints count as outside)."""
        for lo, hi in self.intervals:
            if lo < t < hi:
                return True
            if t <= lo:
                break
        return False

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        if self.is_empty or other.is_empty:
            return EMPTY
        if self.is_full_line:
            return other
        if other.is_full_line:
            return self
        out = []
        a, b = self.intervals, other.intervals
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return interval_union(out)

    def complement(self) -> "IntervalUnion":
        """Open complement; shared endpoints (measure zero) are dropped."""
        if self.is_empty:
            return FULL_LINE
        pieces = []
        cursor = -INF
        for lo, hi in self.intervals:
            if cursor < lo:
                pieces.append((cursor, lo))
            cursor = hi
        if cursor < INF:
            pieces.append((cursor, INF))
        return interval_union(pieces)

    def endpoints(self) -> list[float]:
        """All finite endpoints, in increasing order."""
        out = []
        for lo, hi in self.intervals:
            if math.isfinite(lo):
                out.append(lo)
            if math.isfinite(hi):
                out.append(hi)
        return out

    def __str__(self) -> str:
        if self.is_empty:
            return "{}"
        return " U ".join(f"({lo:g}, {hi:g})" for lo, hi in self.intervals)


def interval_union(pairs: Iterable[Tuple[float, float]]) -> IntervalUnion:
    """Canonicalize ``pairs`` into an :class:`IntervalUnion`.

    Degenerate pairs (``hi <= lo``) are dropped; overlapping or
    nearly-adjacent intervals are merged.
    """
    kept = sorted((float(lo), float(hi)) for lo, hi in pairs if lo < hi)
    if not kept:
        return EMPTY
    merged = [kept[0]]
    for lo, hi in kept[1:]:
        plo, phi = merged[-1]
        if lo - phi <= _merge_tol(phi, lo):
            merged[-1] = (plo, max(phi, hi))
        else:
            merged.append((lo, hi))
    return IntervalUnion(tuple(merged))


def single(lo: float, hi: float) -> IntervalUnion:
    return interval_union([(lo, hi)])


EMPTY = IntervalUnion(())
FULL_LINE = IntervalUnion(((-INF, INF),))


def intersect_all(unions: Iterable[IntervalUnion]) -> IntervalUnion:
    """Intersection of many unions (associative; order independent)."""
    acc = FULL_LINE
    for u in unions:
        if acc.is_empty:
            return EMPTY
        acc = acc.intersect(u)
    return acc
