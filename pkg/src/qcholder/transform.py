"""Cauchy-type sums ``G(v) = sum m / (v - y)`` over the target measure.

``G_k`` denotes the transform of the (unit mass) measure carried by one
frame at depth ``k``, in that frame's coordinates. A child disk of mass
``m`` and target radius ``rho`` contributes ``m G_{k+1}((v - c) / rho) / rho``,
so the evaluation recurses only into children close to the query point;
everything else is summarized:

* interior tiles far from ``v`` are smeared into a uniform density (with
  a first-order correction for the offset of each tile's centroid);
* the ``HOLE x HOLE`` tiles around ``v`` are traversed as quadtrees whose
  cell moments ``(M0, M1, M2)`` come from Morton-ordered prefix sums of the
  pattern's primaries;
* children at the depth cap are atoms (``"atom"``) or uniform disks
  (``"disk"``).

Pair mode evaluates ``G(v + d) - G(v)`` term by term with cancellation-free
formulas, so differences far below the rounding level of ``G(v)`` are
resolved. Query points may be given as a path (children centers plus a
local coordinate in the deepest frame); the path children are then recursed
without ever forming the absolute coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .packing import D0_RADIUS, ExplicitPacking, LatticePacking, TilePattern
from .spatial import _cache

THETA = 2.5          # a cell is far when its center is THETA cell sides away
HOLE = 5             # tiles around the query handled exactly
COLUMN_LIMIT = 256   # exact smear over tile columns below this many columns
LINEAR_BELOW = 1e-4  # |d| / scale under which smooth differences are linearized
_D0_AREA = math.pi * D0_RADIUS ** 2


# --------------------------------------------------------------------------
# pattern moments


def _spread(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64) & np.uint64(0xFFFFFFFF)
    for s, m in ((16, 0x0000FFFF0000FFFF), (8, 0x00FF00FF00FF00FF), (4, 0x0F0F0F0F0F0F0F0F),
                 (2, 0x3333333333333333), (1, 0x5555555555555555)):
        a = (a | (a << np.uint64(s))) & np.uint64(m)
    return a


def morton(ix, iy) -> np.ndarray:
    """Interleaved key; x bits sit above y bits so children are ``4 m + 2 bx + by``."""
    ix = np.asarray(ix, dtype=np.int64)
    iy = np.asarray(iy, dtype=np.int64)
    return ((_spread(ix) << np.uint64(1)) | _spread(iy)).astype(np.int64)


class PatternMoments:
    """Prefix sums of primary centers per level, in Morton order, and node moments.

    Positions are measured from the tile center, in tile units; masses are
    covered areas.
    """

    def __init__(self, pat: TilePattern):
        self.pat = pat
        n = pat.P_max + 1
        self.mort, self.cum1, self.cum2 = [], [], []
        self.n = np.zeros(n, dtype=np.int64)
        self.S1 = np.zeros(n, dtype=complex)
        self.S2 = np.zeros(n, dtype=complex)
        for q in range(n):
            key = pat.keys[q]
            kx, ky = key >> q, key & ((1 << q) - 1)
            m = morton(kx, ky)
            o = np.argsort(m)
            cz = ((kx[o] + 0.5) * 2.0 ** -q - 0.5) + 1j * ((ky[o] + 0.5) * 2.0 ** -q - 0.5)
            self.mort.append(m[o])
            self.cum1.append(np.concatenate([[0j], np.cumsum(cz)]))
            self.cum2.append(np.concatenate([[0j], np.cumsum(cz * cz)]))
            self.n[q] = key.size
            self.S1[q] = cz.sum()
            self.S2[q] = (cz * cz).sum()
        self.N0 = np.asarray(pat.area, dtype=float)
        self.N1 = np.zeros(n, dtype=complex)
        self.N2 = np.zeros(n, dtype=complex)
        for P in range(n):
            for q in range(3, P + 1):
                a = 4.0 ** -q * self.N0[P - q]
                b = 8.0 ** -q * self.N1[P - q]
                e = 16.0 ** -q * self.N2[P - q]
                self.N1[P] += a * self.S1[q] + self.n[q] * b
                self.N2[P] += a * self.S2[q] + 2.0 * b * self.S1[q] + self.n[q] * e

    def is_primary(self, q: int, m: np.ndarray) -> np.ndarray:
        keys = self.mort[q]
        if keys.size == 0:
            return np.zeros(m.shape, dtype=bool)
        pos = np.minimum(np.searchsorted(keys, m), keys.size - 1)
        return keys[pos] == m

    def cell_moments(self, P: np.ndarray, l: int, m: np.ndarray, cc: np.ndarray):
        """Moments about ``cc`` of the primaries (levels ``l < q <= P``) inside level-``l`` cells."""
        M0 = np.zeros(m.shape)
        M1 = np.zeros(m.shape, dtype=complex)
        M2 = np.zeros(m.shape, dtype=complex)
        top = int(P.max(initial=0))
        for q in range(max(l + 1, 3), top + 1):
            keys = self.mort[q]
            if keys.size == 0:
                continue
            sel = np.nonzero(P >= q)[0]
            if sel.size == 0:
                continue
            sh = np.int64(2 * (q - l))
            lo = np.searchsorted(keys, m[sel] << sh)
            hi = np.searchsorted(keys, (m[sel] + 1) << sh)
            S0 = (hi - lo).astype(float)
            hit = S0 > 0
            if not hit.any():
                continue
            sel, lo, hi, S0 = sel[hit], lo[hit], hi[hit], S0[hit]
            S1 = self.cum1[q][hi] - self.cum1[q][lo]
            S2 = self.cum2[q][hi] - self.cum2[q][lo]
            c = cc[sel]
            T1 = S1 - c * S0
            T2 = S2 - 2.0 * c * S1 + c * c * S0
            r = P[sel] - q
            a = 4.0 ** -q * self.N0[r]
            b = 8.0 ** -q * self.N1[r]
            e = 16.0 ** -q * self.N2[r]
            M0[sel] += a * S0
            M1[sel] += a * T1 + b * S0
            M2[sel] += a * T2 + 2.0 * b * T1 + e * S0
        return M0, M1, M2


def pattern_moments(pat: TilePattern) -> PatternMoments:
    c = _cache(pat, "_moments")
    if "pm" not in c:
        c["pm"] = PatternMoments(pat)
    return c["pm"]


# --------------------------------------------------------------------------
# elementary fields and their differences


def _inv_pow(a, d, k: int):
    """``(a + d)**-k - a**-k`` for k = 1, 2, 3 without cancellation."""
    b = a + d
    if k == 1:
        return -d / (a * b)
    if k == 2:
        return -d * (a + b) / (a * a * b * b)
    return -d * (a * a + a * b + b * b) / (a ** 3 * b ** 3)


def multipole(a, d, M0, M1, M2):
    """Value at ``a = v - center`` and difference for the offset ``d``."""
    val = M0 / a + M1 / a ** 2 + M2 / a ** 3
    dif = M0 * _inv_pow(a, d, 1) + M1 * _inv_pow(a, d, 2) + M2 * _inv_pow(a, d, 3)
    return val, dif


def polygon_field(v, corners):
    """``integral of dA / (v - z)`` over a polygon, with first and second ``d/dv``."""
    v = np.asarray(v, dtype=complex)
    val = np.zeros(v.shape, dtype=complex)
    d1 = np.zeros(v.shape, dtype=complex)
    d2 = np.zeros(v.shape, dtype=complex)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        e = b - a
        q = (v - a) / e
        dq = q - np.conj(q)
        with np.errstate(divide="ignore", invalid="ignore"):
            dl = np.log(q - 1.0) - np.log(q)
            r = 1.0 / (q - 1.0) - 1.0 / q
            val += np.conj(e) * (-1.0 - dq * dl)
            d1 += -(np.conj(e) / e) * (dl + dq * r)
            d2 += -(np.conj(e) / e ** 2) * (2.0 * r + dq * (1.0 / q ** 2 - 1.0 / (q - 1.0) ** 2))
    return val / 2j, d1 / 2j, d2 / 2j


def _inside_polygon(v, corners):
    x, y = v.real, v.imag
    inside = np.zeros(v.shape, dtype=bool)
    n = len(corners)
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        cond = (a.imag > y) != (b.imag > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = a.real + (y - a.imag) * (b.real - a.real) / (b.imag - a.imag)
        inside ^= cond & (x < xs)
    return inside


def polygon_pair(v, d, corners, scale: float):
    """Value, difference, derivative and derivative difference of a polygon field."""
    val, d1, d2 = polygon_field(v, corners)
    small = np.abs(d) < LINEAR_BELOW * scale
    inside = _inside_polygon(v, corners)
    dif = d1 * d + np.pi * inside * np.conj(d) + 0.5 * d2 * d * d
    ddif = d2 * d
    big = ~small
    if big.any():
        v2, e1, _ = polygon_field(v[big] + d[big], corners)
        dif[big] = v2 - val[big]
        ddif[big] = e1 - d1[big]
    return val, dif, d1, ddif


# --------------------------------------------------------------------------
# frame evaluation


@dataclass
class Queries:
    """Query points of one frame: a path of children plus a local tail.

    ``groups[:, j]``, ``centers[:, j]`` name the path child in frame ``j`` for
    ``j < depth``; ``tail`` is the point in frame ``depth``.
    """

    depth: np.ndarray
    groups: np.ndarray
    centers: np.ndarray
    tail: np.ndarray
    dtail: np.ndarray

    def take(self, idx) -> "Queries":
        return Queries(self.depth[idx], self.groups[idx], self.centers[idx], self.tail[idx], self.dtail[idx])

    def __len__(self) -> int:
        return self.tail.size


class CauchyEngine:
    """Evaluates ``G_0`` (and pair differences) for one plan at a fixed depth."""

    def __init__(self, plan, depth: int, near_factor: float = 8.0, cap: str = "atom"):
        if cap not in ("atom", "disk"):
            raise ValueError(f"unknown cap model {cap!r}")
        if not 0 <= depth <= plan.N_max:
            raise ValueError(f"depth {depth} outside 0..{plan.N_max}")
        self.plan = plan
        self.N = depth
        self.nf = float(near_factor)
        self.cap = cap

    # -- public entry points
    def evaluate(self, q: Queries):
        """``(G_0(v), G_0(v + d) - G_0(v), error bound)`` per query."""
        if self.N == 0:
            x = self._local(q, 0)
            dx = self._local_d(q, 0)
            return self._cap_term(x, dx, 1.0)
        return self._frame(0, q)

    # -- helpers
    def _local(self, q: Queries, k: int) -> np.ndarray:
        v = q.tail.copy()
        tab = self.plan.tab_log_rho
        for j in range(int(q.depth.max(initial=0)) - 1, k - 1, -1):
            s = q.depth > j
            if s.any():
                v[s] = q.centers[s, j] + np.exp(tab[j, q.groups[s, j]]) * v[s]
        return v

    def _local_d(self, q: Queries, k: int) -> np.ndarray:
        d = q.dtail.copy()
        tab = self.plan.tab_log_rho
        for j in range(int(q.depth.max(initial=0)) - 1, k - 1, -1):
            s = q.depth > j
            if s.any():
                d[s] = d[s] * np.exp(tab[j, q.groups[s, j]])
        return d

    def _cap_term(self, x, dx, w):
        """Cap model for a child in its own coordinates ``x`` (unit radius), weight ``w``."""
        ax = np.abs(x)
        if self.cap == "atom":
            val = w / x
            dif = w * _inv_pow(x, dx, 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                err = np.where(ax > 1.0, w / (ax * (ax - 1.0)), np.inf)
            return val, dif, err
        x2 = x + dx
        a2 = np.abs(x2)
        in1, in2 = ax <= 1.0, a2 <= 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            val = w * np.where(in1, np.conj(x), 1.0 / x)
            dif = np.where(in1 & in2, w * np.conj(dx),
                           np.where(~in1 & ~in2, w * _inv_pow(x, dx, 1),
                                    w * (np.where(in2, np.conj(x2), 1.0 / x2) - np.where(in1, np.conj(x), 1.0 / x))))
            err = np.where(ax > 1.0, w / (ax * np.maximum(ax - 1.0, 1e-300)), 2.0 * w)
        return val, dif, np.minimum(err, 4.0 * w)

    def _frame(self, k: int, q: Queries):
        plan = self.plan
        gen = plan.generations[k]
        n = len(q)
        v = self._local(q, k)
        dv = self._local_d(q, k)
        has_path = q.depth > k
        excl = np.where(has_path, q.centers[:, min(k, q.centers.shape[1] - 1)] if q.centers.shape[1] else 0j,
                        np.nan + 0j)
        val = np.zeros(n, dtype=complex)
        dif = np.zeros(n, dtype=complex)
        err = np.zeros(n)
        disks = []
        if isinstance(gen, LatticePacking):
            self._lattice(k, gen, v, dv, excl, val, dif, err, disks)
        else:
            c, R, g = gen.disks()
            qi = np.repeat(np.arange(n), c.size)
            disks.append((qi, np.tile(c, n), np.tile(R, n), np.tile(g, n)))
        # children
        if disks:
            qi = np.concatenate([d[0] for d in disks])
            c = np.concatenate([d[1] for d in disks])
            R = np.concatenate([d[2] for d in disks])
            g = np.concatenate([d[3] for d in disks]).astype(np.int64)
        else:
            qi = np.zeros(0, dtype=np.int64)
            c = np.zeros(0, dtype=complex)
            R = np.zeros(0)
            g = np.zeros(0, dtype=np.int64)
        keep = ~(np.abs(c - excl[qi]) < 0.5 * R)
        qi, c, R, g = qi[keep], c[keep], R[keep], g[keep]
        cov = gen.coverage
        m = R * R / cov
        rho = np.exp(plan.tab_log_rho[k, g])
        a = v[qi] - c
        dmin = np.minimum(np.abs(a), np.abs(a + dv[qi]))
        far = dmin > self.nf * rho
        fv = m[far] / a[far]
        fd = m[far] * _inv_pow(a[far], dv[qi[far]], 1)
        np.add.at(val, qi[far], fv)
        np.add.at(dif, qi[far], fd)
        with np.errstate(divide="ignore"):
            np.add.at(err, qi[far], m[far] * rho[far] / (dmin[far] * (dmin[far] - rho[far])))
        near = ~far
        nq, nc, nR, ng = qi[near], c[near], R[near], g[near]
        nm, nrho = m[near], rho[near]
        cap = k + 1 == self.N
        # path children of this frame
        pidx = np.nonzero(has_path)[0]
        pg = q.groups[pidx, k] if pidx.size else np.zeros(0, dtype=np.int64)
        pm = np.exp(2.0 * plan.tab_log_R[k, pg]) / cov
        prho = np.exp(plan.tab_log_rho[k, pg])
        if cap:
            sub = q.take(pidx)
            x = self._local(sub, k + 1)
            dx = self._local_d(sub, k + 1)
            cv, cd, ce = self._cap_term(x, dx, pm / prho)
            np.add.at(val, pidx, cv)
            np.add.at(dif, pidx, cd)
            np.add.at(err, pidx, ce)
            x = (v[nq] - nc) / nrho
            dx = dv[nq] / nrho
            cv, cd, ce = self._cap_term(x, dx, nm / nrho)
            np.add.at(val, nq, cv)
            np.add.at(dif, nq, cd)
            np.add.at(err, nq, ce)
            return val, dif, err
        # recurse: path children keep their path, other near children start a new one
        width = q.groups.shape[1]
        sub = q.take(pidx)
        nn = nq.size
        new = Queries(np.full(nn, k + 1, dtype=np.int64), np.full((nn, width), -1, dtype=np.int64),
                      np.zeros((nn, width), dtype=complex), (v[nq] - nc) / nrho, dv[nq] / nrho)
        both = Queries(np.concatenate([sub.depth, new.depth]), np.concatenate([sub.groups, new.groups]),
                       np.concatenate([sub.centers, new.centers]), np.concatenate([sub.tail, new.tail]),
                       np.concatenate([sub.dtail, new.dtail]))
        if len(both):
            cv, cd, ce = self._frame(k + 1, both)
            w = np.concatenate([pm / prho, nm / nrho])
            owner = np.concatenate([pidx, nq])
            np.add.at(val, owner, w * cv)
            np.add.at(dif, owner, w * cd)
            np.add.at(err, owner, w * ce)
        return val, dif, err

    # -- lattice frames
    def _lattice(self, k, p: LatticePacking, v, dv, excl, val, dif, err, disks):
        pat = p.pattern
        pm = pattern_moments(pat)
        P = p.P
        cov = p.coverage
        dens = pat.area[P] / (math.pi * cov)          # mass per unit area on interior tiles
        delta = p.delta
        n = v.size
        # smear over the interior tiles
        ncols = p.ix_hi - p.ix_lo + 1
        e_tile = delta * pm.N1[P] / pm.N0[P]          # centroid offset of a tile's mass
        if ncols <= COLUMN_LIMIT:
            sv = np.zeros(n, dtype=complex)
            sd = np.zeros(n, dtype=complex)
            sdd = np.zeros(n, dtype=complex)
            sddd = np.zeros(n, dtype=complex)
            from . import kernels
            lo, hi = kernels.column_range(np.arange(p.ix_lo, p.ix_hi + 1), delta, p.off_x, p.off_y)
            for ix, a, b in zip(range(p.ix_lo, p.ix_hi + 1), lo.tolist(), hi.tolist()):
                if b < a:
                    continue
                x0 = p.off_x + ix * delta
                y0, y1 = p.off_y + a * delta, p.off_y + (b + 1) * delta
                corners = [complex(x0, y0), complex(x0 + delta, y0), complex(x0 + delta, y1), complex(x0, y1)]
                fv, fd, f1, f1d = polygon_pair(v, dv, corners, delta)
                sv += fv
                sd += fd
                sdd += f1
                sddd += f1d
            smear_strip = 0.0
        else:
            mass_int = p.n_interior * delta * delta * dens
            rho_u = mass_int / math.pi
            r = np.abs(v)
            r2 = np.abs(v + dv)
            in1, in2 = r <= 1.0, r2 <= 1.0
            with np.errstate(divide="ignore", invalid="ignore"):
                sv = np.where(in1, math.pi * np.conj(v), math.pi / v) * rho_u / dens
                out2 = np.where(in2, math.pi * np.conj(v + dv), math.pi / (v + dv))
                sd = np.where(in1 & in2, math.pi * np.conj(dv),
                              np.where(~in1 & ~in2, math.pi * _inv_pow(v, dv, 1), out2 - np.where(in1, math.pi * np.conj(v), math.pi / v))) * rho_u / dens
                sdd = np.where(in1, 0j, -math.pi / v ** 2) * rho_u / dens
                sddd = np.where(in1 & in2, 0j, np.where(~in1 & ~in2, -math.pi * _inv_pow(v, dv, 2), 0j)) * rho_u / dens
            # interior tiles miss a strip of width ~delta along the circle
            smear_strip = dens * 2.0 * math.pi * 1.5 * delta
            with np.errstate(divide="ignore"):
                err += smear_strip / np.maximum(np.abs(1.0 - r), delta)
        val += dens * (sv - e_tile * sdd)
        dif += dens * (sd - e_tile * sddd)
        # tile quadrupoles beyond the hole: their sum cancels by symmetry up to
        # the discreteness of the lattice, which we bound by the first ring
        err += dens * delta * abs(pm.N2[P] / pm.N0[P]) * 2.0 * math.pi * (2.0 / HOLE) ** 2
        # hole tiles: remove their smear, add them exactly
        tx, ty = p.tile_of(v)[:2]
        offs = np.arange(HOLE) - HOLE // 2
        hx = (tx[:, None, None] + offs[None, :, None] + 0 * offs[None, None, :]).reshape(n, -1)
        hy = (ty[:, None, None] + 0 * offs[None, :, None] + offs[None, None, :]).reshape(n, -1)
        qi = np.repeat(np.arange(n), HOLE * HOLE)
        hx, hy = hx.ravel(), hy.ravel()
        ok = p.is_interior(hx, hy)
        qi, hx, hy = qi[ok], hx[ok], hy[ok]
        org = p.tile_origin(hx, hy)
        if qi.size:
            # square fields relative to each square (translation invariant)
            vv = v[qi] - org
            sq = [0j, complex(delta, 0), complex(delta, delta), complex(0, delta)]
            fv, fd, f1, f1d = polygon_pair(vv, dv[qi], sq, delta)
            np.add.at(val, qi, -dens * (fv - e_tile * f1))
            np.add.at(dif, qi, -dens * (fd - e_tile * f1d))
        roots = [(qi, org, np.full(qi.size, delta), np.full(qi.size, P, dtype=np.int64),
                  np.zeros(qi.size, dtype=np.int64))]
        B = p.boundary
        nb = B["q"].size
        if nb:
            bq = B["q"]
            s = delta * 2.0 ** -bq.astype(float)
            bo = p.tile_origin(B["ix"], B["iy"]) + s * (B["kx"] + 1j * B["ky"])
            roots.append((np.repeat(np.arange(n), nb), np.tile(bo, n), np.tile(s, n),
                          np.tile(P - bq, n), np.tile(bq, n)))
        self._traverse(k, p, pm, roots, v, dv, val, dif, err, disks)

    def _traverse(self, k, p, pm, roots, v, dv, val, dif, err, disks):
        """Quadtree walk over node/cell records; near nodes emit their big disk."""
        cov = p.coverage
        qi = np.concatenate([r[0] for r in roots])
        o = np.concatenate([r[1] for r in roots])
        h = np.concatenate([r[2] for r in roots])
        P = np.concatenate([r[3] for r in roots])
        lev = np.concatenate([r[4] for r in roots])
        l = np.zeros(qi.size, dtype=np.int64)
        ix = np.zeros(qi.size, dtype=np.int64)
        iy = np.zeros(qi.size, dtype=np.int64)
        mort = np.zeros(qi.size, dtype=np.int64)
        l2g = p.level_to_group
        while qi.size:
            s = h * 2.0 ** -l.astype(float)
            cct = ((ix + 0.5) * 2.0 ** -l.astype(float) - 0.5) + 1j * ((iy + 0.5) * 2.0 ** -l.astype(float) - 0.5)
            cc = o + h * (0.5 + 0.5j) + h * cct
            M0 = np.zeros(qi.size)
            M1 = np.zeros(qi.size, dtype=complex)
            M2 = np.zeros(qi.size, dtype=complex)
            node = l == 0
            M0[node] = pm.N0[P[node]]
            M1[node] = pm.N1[P[node]]
            M2[node] = pm.N2[P[node]]
            for ll in np.unique(l[~node]):
                sel = np.nonzero(l == ll)[0]
                a0, a1, a2 = pm.cell_moments(P[sel], int(ll), mort[sel], cct[sel])
                M0[sel], M1[sel], M2[sel] = a0, a1, a2
            scale = h * h / (math.pi * cov)
            M0 = M0 * scale
            M1 = M1 * scale * h
            M2 = M2 * scale * h * h
            live = M0 > 0
            a = v[qi] - cc
            d = np.minimum(np.abs(a), np.abs(a + dv[qi]))
            far = live & (d > THETA * s)
            if far.any():
                fv, fd = multipole(a[far], dv[qi[far]], M0[far], M1[far], M2[far])
                np.add.at(val, qi[far], fv)
                np.add.at(dif, qi[far], fd)
                rr = 0.7072 * s[far]
                np.add.at(err, qi[far], M0[far] * (rr / d[far]) ** 3 / (d[far] - rr))
            opn = live & ~far
            # big disks of opened nodes
            on = np.nonzero(opn & node)[0]
            if on.size:
                disks.append((qi[on], o[on] + h[on] * (0.5 + 0.5j), D0_RADIUS * h[on], l2g[lev[on]]))
            oc = np.nonzero(opn & (l < P))[0]
            if oc.size == 0:
                break
            # four children per opened record
            rep = np.repeat(oc, 4)
            bx = np.tile(np.array([0, 0, 1, 1]), oc.size)
            by = np.tile(np.array([0, 1, 0, 1]), oc.size)
            nl = l[rep] + 1
            nix = 2 * ix[rep] + bx
            niy = 2 * iy[rep] + by
            nm = 4 * mort[rep] + 2 * bx + by
            qi, o, h, P, lev = qi[rep], o[rep], h[rep], P[rep], lev[rep]
            prim = np.zeros(rep.size, dtype=bool)
            for ll in np.unique(nl):
                if ll < 3:
                    continue
                sel = np.nonzero((nl == ll) & (P >= ll))[0]
                if sel.size:
                    prim[sel] = pm.is_primary(int(ll), nm[sel])
            # a child cell that is itself a primary becomes a node of its own
            pr = np.nonzero(prim)[0]
            sz = h[pr] * 2.0 ** -nl[pr].astype(float)
            o = o.copy()
            o[pr] = o[pr] + sz * (nix[pr] + 1j * niy[pr])
            h = h.copy()
            h[pr] = sz
            P = P.copy()
            P[pr] = P[pr] - nl[pr]
            lev = lev.copy()
            lev[pr] = lev[pr] + nl[pr]
            nl[pr] = 0
            nix[pr] = 0
            niy[pr] = 0
            nm[pr] = 0
            l, ix, iy, mort = nl, nix, niy, nm


def path_queries(groups, centers, depth, tail, dtail=None) -> Queries:
    tail = np.asarray(tail, dtype=complex).ravel()
    n = tail.size
    groups = np.asarray(groups, dtype=np.int64).reshape(n, -1)
    centers = np.asarray(centers, dtype=complex).reshape(n, -1)
    depth = np.broadcast_to(np.asarray(depth, dtype=np.int64), (n,)).copy()
    dtail = np.zeros(n, dtype=complex) if dtail is None else \
        np.broadcast_to(np.asarray(dtail, dtype=complex), (n,)).copy()
    return Queries(depth, groups, centers, tail, dtail)


def point_queries(v, dv=None, width: int = 1) -> Queries:
    v = np.asarray(v, dtype=complex).ravel()
    n = v.size
    return path_queries(np.full((n, width), -1), np.zeros((n, width), complex), 0, v, dv)
