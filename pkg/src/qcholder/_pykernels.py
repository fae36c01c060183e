"""NumPy implementations of the hot kernels.

These are the reference versions; ``_ckernels`` (Cython) must agree with them
to rounding. Radius arguments may be scalars or arrays broadcastable to ``y``.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def _log_abs(y):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(y))


def stretch_offsets(y, log_r, log_sigma, K):
    y = np.asarray(y, dtype=complex)
    L, ls = np.broadcast_arrays(_log_abs(y) - log_r, np.asarray(log_sigma, dtype=float))
    core = L < K * ls
    ann = (L <= 0.0) & ~core
    fac = np.ones(np.broadcast(y, L).shape)
    fac = np.where(core, np.exp((1.0 - K) * ls), fac)
    with np.errstate(invalid="ignore", over="ignore"):
        fac = np.where(ann, np.exp((1.0 / K - 1.0) * L), fac)
    return y * fac


def unstretch_offsets(w, log_r, log_sigma, K):
    w = np.asarray(w, dtype=complex)
    L, ls = np.broadcast_arrays(_log_abs(w) - log_r, np.asarray(log_sigma, dtype=float))
    core = L < ls
    ann = (L <= 0.0) & ~core
    fac = np.ones(np.broadcast(w, L).shape)
    fac = np.where(core, np.exp((K - 1.0) * ls), fac)
    with np.errstate(invalid="ignore", over="ignore"):
        fac = np.where(ann, np.exp((K - 1.0) * L), fac)
    return w * fac


def stretch_log_jacobian(y, log_r, log_sigma, K):
    y = np.asarray(y, dtype=complex)
    L, ls = np.broadcast_arrays(_log_abs(y) - log_r, np.asarray(log_sigma, dtype=float))
    core = L < K * ls
    ann = (L <= 0.0) & ~core
    out = np.zeros(np.broadcast(y, L).shape)
    out = np.where(core, 2.0 * (1.0 - K) * ls, out)
    with np.errstate(invalid="ignore"):
        out = np.where(ann, -math.log(K) + 2.0 * (1.0 / K - 1.0) * L, out)
    return out


def tile_is_interior(ix, iy, delta, off_x, off_y):
    """Canonical test: the closed square lies in the open unit disk."""
    a = off_x + np.asarray(ix, dtype=np.float64) * delta
    b = off_y + np.asarray(iy, dtype=np.float64) * delta
    xm = np.maximum(np.abs(a), np.abs(a + delta))
    ym = np.maximum(np.abs(b), np.abs(b + delta))
    return xm * xm + ym * ym < 1.0


def column_range(ix, delta, off_x, off_y):
    """Interior tile rows ``lo..hi`` (inclusive) of columns ``ix``; empty when lo > hi."""
    ix = np.asarray(ix, dtype=np.int64)
    a = off_x + ix.astype(np.float64) * delta
    xm = np.maximum(np.abs(a), np.abs(a + delta))
    H = np.sqrt(np.clip(1.0 - xm * xm, 0.0, None))
    lo = (np.floor((-H - off_y) / delta) + 1.0).astype(np.int64)
    hi = (np.ceil((H - off_y) / delta) - 2.0).astype(np.int64)
    # rounding in H can misplace the ends by one row; settle them with the canonical test
    for _ in range(2):
        lo = np.where(tile_is_interior(ix, lo - 1, delta, off_x, off_y), lo - 1, lo)
        lo = np.where(~tile_is_interior(ix, lo, delta, off_x, off_y) & (lo <= hi), lo + 1, lo)
        hi = np.where(tile_is_interior(ix, hi + 1, delta, off_x, off_y), hi + 1, hi)
        hi = np.where(~tile_is_interior(ix, hi, delta, off_x, off_y) & (lo <= hi), hi - 1, hi)
    empty = (xm >= 1.0) | (hi < lo)
    return np.where(empty, 1, lo), np.where(empty, 0, hi)


def column_bounds(delta, off_x):
    return math.floor((-1.0 - off_x) / delta), math.floor((1.0 - off_x) / delta)


def count_interior_tiles(delta, off_x, off_y, threads=0):
    """Number of lattice squares ``[off + i delta, off + (i+1) delta]^2`` whose
    closure lies in the open unit disk."""
    ix_lo, ix_hi = column_bounds(delta, off_x)
    total = 0
    chunk = 1 << 21
    for start in range(ix_lo, ix_hi + 1, chunk):
        ix = np.arange(start, min(start + chunk, ix_hi + 1), dtype=np.int64)
        lo, hi = column_range(ix, delta, off_x, off_y)
        total += int((hi - lo + 1).sum())
    return total


def column_violations(delta, off_x, off_y, threads=0):
    """Columns whose end tiles are not interior (0 for a valid lattice)."""
    ix_lo, ix_hi = column_bounds(delta, off_x)
    bad = 0
    chunk = 1 << 21
    for start in range(ix_lo, ix_hi + 1, chunk):
        ix = np.arange(start, min(start + chunk, ix_hi + 1), dtype=np.int64)
        lo, hi = column_range(ix, delta, off_x, off_y)
        ok = lo <= hi
        good = tile_is_interior(ix[ok], lo[ok], delta, off_x, off_y) & \
            tile_is_interior(ix[ok], hi[ok], delta, off_x, off_y)
        bad += int((~good).sum())
    return bad


def pattern_locate(wx, wy, P, prim_keys, prim_level_start, shrink_radius):
    """Locate points of the unit tile in the self-similar tile pattern.

    ``prim_keys[q]`` is the sorted array of ``ix * 2**q + iy`` for primary
    cells of level ``q``; ``prim_level_start[q]`` their global offset.
    Returns ``(found, level, chain, cx, cy)`` where ``chain`` has shape
    ``(n, P // 3 + 1)`` (``-1`` padded) and ``(cx, cy)`` is the disk center
    in tile coordinates.
    """
    wx = np.array(wx, dtype=np.float64)
    wy = np.array(wy, dtype=np.float64)
    n = wx.shape[0]
    depth = P // 3 + 1
    chain = np.full((n, depth), -1, dtype=np.int64)
    level = np.zeros(n, dtype=np.int64)
    found = np.zeros(n, dtype=bool)
    ox = np.zeros(n)
    oy = np.zeros(n)
    scale = np.ones(n)
    rem = np.full(n, P, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    r2 = shrink_radius * shrink_radius
    for step in range(depth):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        x, y = wx[idx], wy[idx]
        in_d0 = (x - 0.5) ** 2 + (y - 0.5) ** 2 <= r2
        hit = idx[in_d0]
        found[hit] = True
        active[hit] = False
        idx = idx[~in_d0]
        x, y = x[~in_d0], y[~in_d0]
        moved = np.zeros(idx.size, dtype=bool)
        for q in range(3, len(prim_keys)):
            keys = prim_keys[q]
            if keys.size == 0:
                continue
            sel = np.nonzero(~moved & (rem[idx] >= q))[0]
            if sel.size == 0:
                continue
            m = 1 << q
            kx = np.minimum(np.floor(x[sel] * m), m - 1).astype(np.int64)
            ky = np.minimum(np.floor(y[sel] * m), m - 1).astype(np.int64)
            key = kx * m + ky
            pos = np.searchsorted(keys, key)
            pos_c = np.minimum(pos, keys.size - 1)
            ok = keys[pos_c] == key
            s = sel[ok]
            gi = idx[s]
            chain[gi, step] = prim_level_start[q] + pos_c[ok]
            ox[gi] += scale[gi] * kx[ok] / m
            oy[gi] += scale[gi] * ky[ok] / m
            scale[gi] /= m
            level[gi] += q
            rem[gi] -= q
            x[s] = x[s] * m - kx[ok]
            y[s] = y[s] * m - ky[ok]
            moved[s] = True
        active[idx[~moved]] = False
        wx[idx] = x
        wy[idx] = y
    cx = ox + scale * 0.5
    cy = oy + scale * 0.5
    return found, level, chain, cx, cy
