"""Closed-interval set algebra with infinite endpoints.

Endpoints may be ``-inf``/``+inf``; they are treated as order sentinels only
(compared and copied, never combined arithmetically), so no IEEE overflow or
``inf - inf`` path exists.
"""

from __future__ import annotations

import math

MERGE_TOL = 1e-9


def is_valid_interval(lo: float, hi: float) -> bool:
    return lo <= hi and not (math.isinf(lo) and math.isinf(hi) and lo == hi)


def normalize(intervals: list[tuple[float, float]], tol: float = MERGE_TOL) -> list[tuple[float, float]]:
    """Sort and merge closed intervals; endpoints within ``tol`` are glued.

    The tolerance is applied symmetrically: two intervals merge when the gap
    between them is at most ``tol``.
    """
    items = sorted((lo, hi) for lo, hi in intervals if is_valid_interval(lo, hi))
    merged: list[tuple[float, float]] = []
    for lo, hi in items:
        if merged and lo <= _upper_plus(merged[-1][1], tol):
            plo, phi = merged[-1]
            merged[-1] = (plo, max(phi, hi))
        else:
            merged.append((lo, hi))
    return merged


def _upper_plus(hi: float, tol: float) -> float:
    # +inf absorbs the tolerance without arithmetic on inf
    return hi if math.isinf(hi) else hi + tol


def union(a: list[tuple[float, float]], b: list[tuple[float, float]], tol: float = MERGE_TOL) -> list[tuple[float, float]]:
    return normalize(list(a) + list(b), tol)


def contains(intervals: list[tuple[float, float]], x: float, tol: float = 0.0) -> bool:
    for lo, hi in intervals:
        above = x >= lo if math.isinf(lo) else x >= lo - tol
        below = x <= hi if math.isinf(hi) else x <= hi + tol
        if above and below:
            return True
    return False


def total_length(intervals: list[tuple[float, float]]) -> float:
    """Sum of finite component lengths; ``inf`` if any component is unbounded."""
    out = 0.0
    for lo, hi in intervals:
        if math.isinf(lo) or math.isinf(hi):
            return math.inf
        out += hi - lo
    return out


def gaps(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Open gaps between consecutive components of a normalized set."""
    out = []
    for (_, hi), (lo, _) in zip(intervals, intervals[1:]):
        if lo > hi:
            out.append((hi, lo))
    return out


def equal(a: list[tuple[float, float]], b: list[tuple[float, float]], tol: float = MERGE_TOL) -> bool:
    na, nb = normalize(a, tol), normalize(b, tol)
    if len(na) != len(nb):
        return False
    for (alo, ahi), (blo, bhi) in zip(na, nb):
        if not _endpoint_close(alo, blo, tol) or not _endpoint_close(ahi, bhi, tol):
            return False
    return True


def _endpoint_close(x: float, y: float, tol: float) -> bool:
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol
