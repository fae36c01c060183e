"""Spatial queries on one generation packing, in its unit-disk frame.

All masses here are in *area units*: a disk of radius ``R`` weighs ``pi R**2``
(its share of the generation mass is that over ``pi * coverage``), and its
weight sits at the disk center, where the next generation lives.

Lattice packings are handled hierarchically: whole tiles and whole primary
cells are summarized by their covered area, tile interiors by a raster of the
pattern (for disk masses) or by a quadtree of complex moments (for Cauchy
sums), so query cost does not grow with the number of disks.
"""
from __future__ import annotations

import math

import numpy as np

from .packing import D0_RADIUS, ExplicitPacking, LatticePacking, TilePattern

RASTER_LEVEL = 8
PYRAMID_LEVEL = 6
_D0_AREA = math.pi * D0_RADIUS ** 2


# --------------------------------------------------------------------------
# pattern rasters and moment pyramids (cached on the pattern)


def _cache(pat: TilePattern, name: str) -> dict:
    if not hasattr(pat, name):
        setattr(pat, name, {})
    return getattr(pat, name)


def _level_prims(pat: TilePattern, q: int):
    lo, hi = pat.level_start[q], pat.level_start[q + 1]
    key = pat.keys[q]
    return key >> q, key & ((1 << q) - 1), lo, hi


def full_raster(pat: TilePattern, P: int) -> np.ndarray:
    """Covered area of ``T(P)`` binned on a ``2**8`` grid (mass at disk centers)."""
    cache = _cache(pat, "_raster_full")
    if P in cache:
        return cache[P]
    n = 1 << RASTER_LEVEL
    R = np.zeros((n, n))
    R[n // 2 - 1:n // 2 + 1, n // 2 - 1:n // 2 + 1] += _D0_AREA / 4.0
    for q in range(3, P + 1):
        kx, ky, _, _ = _level_prims(pat, q)
        if kx.size == 0:
            continue
        if q < RASTER_LEVEL:
            s = 1 << (RASTER_LEVEL - q)
            sub = full_raster(pat, P - q).reshape(s, n // s, s, n // s).sum(axis=(1, 3)) * 4.0 ** -q
            for a, b in zip(kx.tolist(), ky.tolist()):
                R[a * s:(a + 1) * s, b * s:(b + 1) * s] += sub
        else:
            sh = q - RASTER_LEVEL
            np.add.at(R, (kx >> sh, ky >> sh), 4.0 ** -q * pat.area[P - q])
    cache[P] = R
    return R


def raster_prefix(pat: TilePattern, P: int) -> np.ndarray:
    """Column-wise prefix sums of the raster without the big central disk."""
    cache = _cache(pat, "_raster_prefix")
    if P not in cache:
        n = 1 << RASTER_LEVEL
        E = full_raster(pat, P).copy()
        E[n // 2 - 1:n // 2 + 1, n // 2 - 1:n // 2 + 1] -= _D0_AREA / 4.0
        C = np.zeros((n, n + 1))
        np.cumsum(E, axis=1, out=C[:, 1:])
        cache[P] = C
    return cache[P]


def raster_mass(pat: TilePattern, P: int, ox, oy, h, x: complex, eps: float) -> float:
    """Area of ``T(P)`` placed at ``(ox, oy)`` with side ``h`` whose centers fall
    in ``D(x, eps)``, excluding each node's own big disk. Vectorized over nodes."""
    ox = np.atleast_1d(np.asarray(ox, float))
    oy = np.atleast_1d(np.asarray(oy, float))
    h = np.broadcast_to(np.asarray(h, float), ox.shape)
    if ox.size == 0:
        return 0.0
    n = 1 << RASTER_LEVEL
    C = raster_prefix(pat, P)
    col = np.arange(n)
    xc = ox[:, None] + h[:, None] * (col[None, :] + 0.5) / n
    w2 = eps * eps - (xc - x.real) ** 2
    w = np.sqrt(np.clip(w2, 0.0, None))
    lo = np.ceil((x.imag - w - oy[:, None]) / h[:, None] * n - 0.5)
    hi = np.floor((x.imag + w - oy[:, None]) / h[:, None] * n - 0.5)
    lo = np.clip(lo, 0, n).astype(np.int64)
    hi = np.clip(hi, -1, n - 1).astype(np.int64)
    ok = (w2 >= 0) & (hi >= lo)
    colb = np.broadcast_to(col, lo.shape)
    val = np.where(ok, C[colb, np.maximum(hi, lo - 1) + 1] - C[colb, lo], 0.0)
    return float(np.sum(val.sum(axis=1) * h * h))


def pyramid(pat: TilePattern, P: int):
    """Quadtree of complex moments ``(M0, M1, M2)`` of ``T(P)`` minus its big disk.

    Level ``l`` has ``2**l x 2**l`` cells; moments are about cell centers.
    ``owner[l]`` marks cells lying inside a primary of level ``<= l`` (global
    primary index) so traversal can switch into that primary's own pyramid.
    """
    cache = _cache(pat, "_pyramid")
    if P in cache:
        return cache[P]
    L = PYRAMID_LEVEL
    mom = [np.zeros((1 << l, 1 << l, 3), dtype=complex) for l in range(L + 1)]
    own = [np.full((1 << l, 1 << l), -1, dtype=np.int64) for l in range(L + 1)]
    for q in range(3, P + 1):
        kx, ky, lo, _ = _level_prims(pat, q)
        if kx.size == 0:
            continue
        content = 4.0 ** -q * pat.area[P - q]
        d0 = _D0_AREA * 4.0 ** -q
        pc = (kx + 0.5) * 2.0 ** -q + 1j * (ky + 0.5) * 2.0 ** -q
        for l in range(L + 1):
            if q <= l:
                s = 1 << (l - q)
                smom, _ = pyramid(pat, P - q)
                sub = smom[l - q] * np.array([4.0 ** -q, 4.0 ** -q * 2.0 ** -q, 4.0 ** -q * 4.0 ** -q])
                for i, (a, b) in enumerate(zip(kx.tolist(), ky.tolist())):
                    blk = (slice(a * s, (a + 1) * s), slice(b * s, (b + 1) * s))
                    mom[l][blk] += sub
                    own[l][blk] = lo + i
                    _add_d0(mom[l], a * s, b * s, s, l, d0)
            else:
                sh = q - l
                cx, cy = kx >> sh, ky >> sh
                cc = (cx + 0.5) * 2.0 ** -l + 1j * (cy + 0.5) * 2.0 ** -l
                dz = pc - cc
                np.add.at(mom[l], (cx, cy, 0), content)
                np.add.at(mom[l], (cx, cy, 1), content * dz)
                np.add.at(mom[l], (cx, cy, 2), content * dz * dz)
    cache[P] = (mom, own)
    return cache[P]


def _add_d0(m: np.ndarray, x0: int, y0: int, s: int, l: int, d0: float) -> None:
    if s == 1:
        m[x0, y0, 0] += d0
        return
    half = 0.5 * 2.0 ** -l
    for dx, sx in ((s // 2 - 1, 1.0), (s // 2, -1.0)):
        for dy, sy in ((s // 2 - 1, 1.0), (s // 2, -1.0)):
            off = complex(sx * half, sy * half)
            m[x0 + dx, y0 + dy] += np.array([d0 / 4, d0 / 4 * off, d0 / 4 * off * off])


def d0_quarter(l: int, ix: int, iy: int) -> float:
    """Fraction of a node's big disk that the pyramid assigns to cell ``(l, ix, iy)``."""
    if l == 0:
        return 1.0
    c = 1 << (l - 1)
    return 0.25 if ix in (c - 1, c) and iy in (c - 1, c) else 0.0


# --------------------------------------------------------------------------
# small geometric helpers


def lens_area(d, r1, r2):
    """Area of the intersection of disks with radii ``r1, r2`` at distance ``d``."""
    d = np.asarray(d, float)
    r1 = np.asarray(r1, float)
    r2 = np.asarray(r2, float)
    small = np.minimum(r1, r2)
    big = np.maximum(r1, r2)
    out = np.where(d >= r1 + r2, 0.0, np.pi * small * small)
    part = (d < r1 + r2) & (d > big - small)
    if np.any(part):
        dd = np.where(part, d, 1.0)
        a1 = np.clip((dd * dd + r1 * r1 - r2 * r2) / (2 * dd * r1), -1, 1)
        a2 = np.clip((dd * dd + r2 * r2 - r1 * r1) / (2 * dd * r2), -1, 1)
        k = np.sqrt(np.clip((-dd + r1 + r2) * (dd + r1 - r2) * (dd - r1 + r2) * (dd + r1 + r2), 0, None))
        lens = r1 * r1 * np.arccos(a1) + r2 * r2 * np.arccos(a2) - 0.5 * k
        out = np.where(part, lens, out)
    return out


def _square_dist(ox, oy, h, x: complex):
    """Nearest and farthest distance from ``x`` to squares ``[ox, ox+h] x [oy, oy+h]``."""
    dx = np.maximum(np.maximum(ox - x.real, x.real - ox - h), 0.0)
    dy = np.maximum(np.maximum(oy - x.imag, x.imag - oy - h), 0.0)
    fx = np.maximum(np.abs(ox - x.real), np.abs(ox + h - x.real))
    fy = np.maximum(np.abs(oy - x.imag), np.abs(oy + h - x.imag))
    return np.hypot(dx, dy), np.hypot(fx, fy)


def _ranges(starts, stops):
    """Concatenate ``arange(s, e)`` for paired bounds."""
    starts = np.asarray(starts, dtype=np.int64)
    lens = np.maximum(np.asarray(stops, dtype=np.int64) - starts, 0)
    tot = int(lens.sum())
    if tot == 0:
        return np.zeros(0, dtype=np.int64)
    rep = np.repeat(starts - np.concatenate([[0], np.cumsum(lens)[:-1]]), lens)
    return rep + np.arange(tot)


# --------------------------------------------------------------------------
# disk masses


def area_in_disk(p, x: complex, eps: float) -> float:
    """Covered area of disks whose centers lie in ``D(x, eps)`` (frame units)."""
    if isinstance(p, ExplicitPacking):
        c, R, _ = p.disks()
        return float(np.sum(np.pi * R * R * (np.abs(c - x) <= eps)))
    return _lattice_area(p, complex(x), float(eps))


def _lattice_area(p: LatticePacking, x: complex, eps: float) -> float:
    d = p.delta
    pat = p.pattern
    P = p.P
    tile_area = d * d * pat.area[P]
    if abs(x) - eps >= 1.0:
        return 0.0
    if eps >= 4096 * d:
        return float(pat.area[P] * lens_area(abs(x), eps, 1.0))
    total = 0.0
    B = p.boundary
    if B["q"].size:
        h = d * 2.0 ** -B["q"].astype(float)
        ox = p.off_x + B["ix"] * d + B["kx"] * h
        oy = p.off_y + B["iy"] * d + B["ky"] * h
    if eps >= 16 * d:
        ix = np.arange(math.ceil((x.real - eps - p.off_x) / d - 0.5),
                       math.floor((x.real + eps - p.off_x) / d - 0.5) + 1)
        xc = p.off_x + (ix + 0.5) * d
        w = np.sqrt(np.clip(eps * eps - (xc - x.real) ** 2, 0, None))
        lo = np.ceil((x.imag - w - p.off_y) / d - 0.5).astype(np.int64)
        hi = np.floor((x.imag + w - p.off_y) / d - 0.5).astype(np.int64)
        clo, chi = _column_range(p, ix)
        n = np.maximum(np.minimum(hi, chi) - np.maximum(lo, clo) + 1, 0)
        total += float(n.sum()) * tile_area
        if B["q"].size:
            cen = (ox + 0.5 * h) + 1j * (oy + 0.5 * h)
            inside = np.abs(cen - x) <= eps
            total += float(np.sum(h[inside] ** 2 * pat.area[P - B["q"][inside]]))
        return total
    ix0 = math.floor((x.real - eps - p.off_x) / d)
    ix1 = math.floor((x.real + eps - p.off_x) / d)
    iy0 = math.floor((x.imag - eps - p.off_y) / d)
    iy1 = math.floor((x.imag + eps - p.off_y) / d)
    gx, gy = np.meshgrid(np.arange(ix0, ix1 + 1), np.arange(iy0, iy1 + 1), indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    gx, gy = gx[p.is_interior(gx, gy)], gy[p.is_interior(gx, gy)]
    total += _nodes_area(pat, P, p.off_x + gx * d, p.off_y + gy * d, d, x, eps)
    if B["q"].size:
        for q in np.unique(B["q"]).tolist():
            sel = B["q"] == q
            total += _nodes_area(pat, P - q, ox[sel], oy[sel], d * 2.0 ** -q, x, eps)
    return total


def _column_range(p: LatticePacking, ix):
    from . import kernels
    return kernels.column_range(ix, p.delta, p.off_x, p.off_y)


def _nodes_area(pat: TilePattern, P: int, ox, oy, h: float, x: complex, eps: float) -> float:
    """Area with centers in ``D(x, eps)`` inside copies of ``T(P)`` of side ``h``."""
    ox = np.asarray(ox, float)
    oy = np.asarray(oy, float)
    if ox.size == 0:
        return 0.0
    near, far = _square_dist(ox, oy, h, x)
    total = float(np.sum(far <= eps)) * h * h * pat.area[P]
    part = (near < eps) & (far > eps)
    if not part.any():
        return total
    ox, oy = ox[part], oy[part]
    cen = (ox + 0.5 * h) + 1j * (oy + 0.5 * h)
    total += float(np.sum(np.abs(cen - x) <= eps)) * _D0_AREA * h * h
    if eps >= h / 16:
        return total + raster_mass(pat, P, ox, oy, h, x, eps)
    for a, b in zip(ox.tolist(), oy.tolist()):
        total += _descend_area(pat, P, a, b, h, x, eps)
    return total


def _descend_area(pat: TilePattern, P: int, ox: float, oy: float, h: float, x: complex,
                  eps: float) -> float:
    """Primaries of one node (big disk excluded) with ``eps < h/16``."""
    total = 0.0
    for q in range(3, P + 1):
        keys = pat.keys[q]
        if keys.size == 0:
            continue
        m = 1 << q
        hq = h / m
        kx0 = max(0, math.floor((x.real - eps - ox) / hq))
        kx1 = min(m - 1, math.floor((x.real + eps - ox) / hq))
        ky0 = max(0, math.floor((x.imag - eps - oy) / hq))
        ky1 = min(m - 1, math.floor((x.imag + eps - oy) / hq))
        if kx0 > kx1 or ky0 > ky1:
            continue
        cols = np.arange(kx0, kx1 + 1, dtype=np.int64)
        if hq >= eps / 16:
            a = np.searchsorted(keys, cols * m + ky0)
            b = np.searchsorted(keys, cols * m + ky1, side="right")
            idx = _ranges(a, b)
            if idx.size == 0:
                continue
            k = keys[idx]
            total += _nodes_area(pat, P - q, ox + (k >> q) * hq, oy + (k & (m - 1)) * hq, hq, x, eps)
        else:
            xc = ox + (cols + 0.5) * hq
            w = np.sqrt(np.clip(eps * eps - (xc - x.real) ** 2, 0, None))
            lo = np.maximum(np.ceil((x.imag - w - oy) / hq - 0.5), 0).astype(np.int64)
            hi = np.minimum(np.floor((x.imag + w - oy) / hq - 0.5), m - 1).astype(np.int64)
            ok = hi >= lo
            if not ok.any():
                continue
            cnt = (np.searchsorted(keys, cols[ok] * m + hi[ok], side="right")
                   - np.searchsorted(keys, cols[ok] * m + lo[ok]))
            total += float(cnt.sum()) * hq * hq * pat.area[P - q]
    return total


# --------------------------------------------------------------------------
# disks crossing a circle


def crossing_disks(p, x: complex, r: float, min_R: float):
    """Disks with radius ``>= min_R`` that meet the circle ``|z - x| = r``.

    Returns ``(centers, radii, group)``.
    """
    x = complex(x)
    if isinstance(p, ExplicitPacking):
        c, R, g = p.disks()
        sel = (R >= min_R) & (np.abs(np.abs(c - x) - r) < R)
        return c[sel], R[sel], g[sel]
    d = p.delta
    pat = p.pattern
    empty = (np.zeros(0, complex), np.zeros(0), np.zeros(0, np.int64))
    if min_R > D0_RADIUS * d or abs(x) - r >= 1.0:
        return empty
    ix0 = math.floor((x.real - r - p.off_x) / d)
    ix1 = math.floor((x.real + r - p.off_x) / d)
    iy0 = math.floor((x.imag - r - p.off_y) / d)
    iy1 = math.floor((x.imag + r - p.off_y) / d)
    if (ix1 - ix0 + 1) * (iy1 - iy0 + 1) > 4_000_000:
        raise ValueError("query circle too large for explicit crossing enumeration")
    gx, gy = np.meshgrid(np.arange(ix0, ix1 + 1), np.arange(iy0, iy1 + 1), indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    ox = p.off_x + gx * d
    oy = p.off_y + gy * d
    near, far = _square_dist(ox, oy, d, x)
    sel = (near < r) & (far > r) & p.is_interior(gx, gy)
    nodes = [(ox[sel], oy[sel], np.full(sel.sum(), d), np.full(sel.sum(), p.P), np.zeros(sel.sum(), np.int64))]
    B = p.boundary
    if B["q"].size:
        h = d * 2.0 ** -B["q"].astype(float)
        bx = p.off_x + B["ix"] * d + B["kx"] * h
        by = p.off_y + B["iy"] * d + B["ky"] * h
        nb, fb = _square_dist(bx, by, h, x)
        s = (nb < r) & (fb > r)
        nodes.append((bx[s], by[s], h[s], p.P - B["q"][s], B["q"][s]))
    ox, oy, h, Pr, lev = (np.concatenate(a) for a in zip(*nodes))
    out_c, out_R, out_l = [], [], []
    while ox.size:
        R0 = D0_RADIUS * h
        c = (ox + 0.5 * h) + 1j * (oy + 0.5 * h)
        hit = (R0 >= min_R) & (np.abs(np.abs(c - x) - r) < R0)
        out_c.append(c[hit])
        out_R.append(R0[hit])
        out_l.append(lev[hit])
        nxt = []
        for q in range(3, int(Pr.max(initial=0)) + 1):
            ok = (Pr >= q) & (D0_RADIUS * h * 2.0 ** -q >= min_R)
            if not ok.any():
                continue
            kx, ky, _, _ = _level_prims(pat, q)
            if kx.size == 0:
                continue
            hq = (h[ok] * 2.0 ** -q)[:, None]
            sx = ox[ok][:, None] + kx[None, :] * hq
            sy = oy[ok][:, None] + ky[None, :] * hq
            hq = np.broadcast_to(hq, sx.shape)
            nn, ff = _square_dist(sx, sy, hq, x)
            s = (nn < r) & (ff > r)
            if s.any():
                nxt.append((sx[s], sy[s], hq[s], np.broadcast_to((Pr[ok] - q)[:, None], s.shape)[s],
                            np.broadcast_to((lev[ok] + q)[:, None], s.shape)[s]))
        if not nxt:
            break
        ox, oy, h, Pr, lev = (np.concatenate(a) for a in zip(*nxt))
    c = np.concatenate(out_c)
    return c, np.concatenate(out_R), p.level_to_group[np.concatenate(out_l)]


# --------------------------------------------------------------------------
# uniform-square Cauchy integrals


def square_field(v, x0: float, y0: float, h: float):
    """``integral over the square of dA / (v - z)`` and its ``d/dv`` (principal value)."""
    v = np.asarray(v, dtype=complex)
    corners = [complex(x0, y0), complex(x0 + h, y0), complex(x0 + h, y0 + h), complex(x0, y0 + h)]
    val = np.zeros(v.shape, dtype=complex)
    der = np.zeros(v.shape, dtype=complex)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        e = b - a
        q = (v - a) / e
        dq = q - np.conj(q)
        dl = np.log(q - 1.0) - np.log(q)
        val += np.conj(e) * (-1.0 - dq * dl)
        der += -(np.conj(e) / e) * (dl + dq * (1.0 / (q - 1.0) - 1.0 / q))
    return val / 2j, der / 2j
