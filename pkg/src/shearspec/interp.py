"""Local Lagrange interpolation on uniform grids.

Degree-7 (8-point) stencils: high enough order that interpolation error on
well-resolved smooth data sits far below the package tolerances, local enough
to stay cheap.  Periodic and bounded variants share the weight computation.
"""

from __future__ import annotations

import numpy as np

_ORDER = 8
_OFFSETS = np.arange(-3, 5)  # stencil node offsets around floor(u)


def _lagrange_weights(s: np.ndarray) -> np.ndarray:
    """Weights for nodes at integer offsets -3..4, evaluation at s in [0, 1)."""
    s = np.asarray(s, dtype=float)
    w = np.empty(s.shape + (_ORDER,))
    for i, m in enumerate(_OFFSETS):
        num = np.ones_like(s)
        den = 1.0
        for k in _OFFSETS:
            if k == m:
                continue
            num = num * (s - k)
            den *= float(m - k)
        w[..., i] = num / den
    return w


def interp_periodic(values: np.ndarray, x0: float, dx: float, queries: np.ndarray) -> np.ndarray:
    """Interpolate samples of a periodic function (period n*dx, nodes x0 + j*dx)."""
    values = np.asarray(values)
    n = values.shape[0]
    u = (np.asarray(queries, dtype=float) - x0) / dx
    base = np.floor(u).astype(np.int64)
    w = _lagrange_weights(u - base)
    idx = (base[..., None] + _OFFSETS[None, :]) % n
    return np.sum(values[idx] * w, axis=-1)


def interp_bounded(values: np.ndarray, x0: float, dx: float, queries: np.ndarray,
                   fill: complex = 0.0, barriers: np.ndarray | None = None) -> np.ndarray:
    """Interpolate non-periodic samples; queries outside the grid get ``fill``.

    Stencils near the ends are shifted inward (one-sided), keeping full order.
    ``barriers`` (sorted node indices) mark kink locations the data is known
    to have: stencils are confined to one side, so the interpolation keeps
    full order on piecewise-smooth data.
    """
    values = np.asarray(values)
    n = values.shape[0]
    q = np.asarray(queries, dtype=float)
    u = (q - x0) / dx
    inside = (u >= -1e-6) & (u <= n - 1 + 1e-6)
    uc = np.clip(u, 0.0, float(n - 1))
    base = np.floor(uc).astype(np.int64)
    if barriers is None or len(barriers) == 0:
        lo = np.clip(base - 3, 0, n - _ORDER)
    else:
        edges = np.concatenate([[0], np.asarray(barriers, dtype=np.int64), [n - 1]])
        piece = np.searchsorted(edges, base, side="right") - 1
        piece = np.clip(piece, 0, len(edges) - 2)
        p_lo, p_hi = edges[piece], edges[piece + 1]
        lo = np.clip(base - 3, p_lo, np.maximum(p_hi - (_ORDER - 1), p_lo))
        lo = np.minimum(lo, n - _ORDER)
    w = _lagrange_weights_general(uc - lo)
    idx = lo[..., None] + np.arange(_ORDER)[None, :]
    out = np.sum(values[idx] * w, axis=-1)
    return np.where(inside, out, fill)


def _lagrange_weights_general(s: np.ndarray) -> np.ndarray:
    """Weights for nodes at offsets 0..7, evaluation at s in [0, 7]."""
    s = np.asarray(s, dtype=float)
    nodes = np.arange(_ORDER)
    w = np.empty(s.shape + (_ORDER,))
    for i, m in enumerate(nodes):
        num = np.ones_like(s)
        den = 1.0
        for k in nodes:
            if k == m:
                continue
            num = num * (s - k)
            den *= float(m - k)
        w[..., i] = num / den
    return w
