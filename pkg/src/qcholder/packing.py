"""Disjoint disk packings of the unit disk, one per construction step.

A generation is packed by repeated square meshes: pass ``p`` uses squares of
side ``delta / 2**p`` that avoid every disk placed so far, and inscribes in
each a disk shrunk by ``SHRINK`` (so closures stay disjoint). Every disk of a
pass has the same radius, so passes are the radius groups.

Because an accepted square only ever interacts with its own inscribed disk,
the fill of one mesh tile is self-similar: the residual of a square minus its
disk is filled by *primary* sub-squares, each of which carries a scaled copy
of the whole tile pattern. :class:`TilePattern` stores only the primaries.
Interior tiles of the lattice all share the pattern, so a generation with
``~1e16`` disks is stored in a few megabytes. Tiles crossing the unit circle
are refined explicitly when there are few of them and dropped otherwise.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import kernels
from .exponents import SIGMA_MAX, log_sigma_from_log_R, max_R_for_sigma_bound, sigma_from_R

SHRINK = 0.99
D0_RADIUS = 0.5 * SHRINK
FORMAT_VERSION = 1
MAX_EXPLICIT = 2_000_000
BOUNDARY_TILE_BUDGET = 200_000
BOUNDARY_CELL_BUDGET = 400_000


class PackingError(RuntimeError):
    """The coverage target cannot be met with the allowed number of passes."""


# --------------------------------------------------------------------------
# self-similar tile pattern


class TilePattern:
    """Primary cells of the unit tile ``[0, 1]^2`` up to level ``P_max``.

    A primary of level ``q`` is a mesh square of side ``2**-q`` disjoint from
    the tile's big disk whose parent square is not. Inside a pattern with
    ``P`` passes it holds the pattern with ``P - q`` passes, scaled.
    """

    def __init__(self, P_max: int):
        self.P_max = P_max
        xs, ys, qs = [], [], []
        mx = np.zeros(1)
        my = np.zeros(1)
        self.keys = [np.zeros(0, dtype=np.int64) for _ in range(P_max + 1)]
        self.level_start = np.zeros(P_max + 2, dtype=np.int64)
        count = 0
        for q in range(1, P_max + 1):
            self.level_start[q] = count
            h = 2.0 ** -q
            cx = np.concatenate([mx, mx + h, mx, mx + h])
            cy = np.concatenate([my, my, my + h, my + h])
            qx = np.clip(0.5, cx, cx + h)
            qy = np.clip(0.5, cy, cy + h)
            near = np.hypot(qx - 0.5, qy - 0.5)
            far = np.hypot(np.maximum(np.abs(cx - 0.5), np.abs(cx + h - 0.5)),
                           np.maximum(np.abs(cy - 0.5), np.abs(cy + h - 0.5)))
            free = near > D0_RADIUS
            covered = far <= D0_RADIUS
            kx = np.rint(cx[free] / h).astype(np.int64)
            ky = np.rint(cy[free] / h).astype(np.int64)
            key = kx * (1 << q) + ky
            order = np.argsort(key)
            self.keys[q] = key[order]
            xs.append(cx[free][order])
            ys.append(cy[free][order])
            qs.append(np.full(order.size, q, dtype=np.int64))
            count += order.size
            keep = ~free & ~covered
            mx, my = cx[keep], cy[keep]
        self.level_start[P_max + 1] = count
        self.level_start[0] = 0
        self.x = np.concatenate(xs) if xs else np.zeros(0)
        self.y = np.concatenate(ys) if ys else np.zeros(0)
        self.q = np.concatenate(qs) if qs else np.zeros(0, dtype=np.int64)
        # disks per level and covered area inside T(P)
        n = P_max + 1
        per_level = np.array([self.keys[q].size for q in range(n)], dtype=object)
        cnt = [[0] * n for _ in range(n)]
        for P in range(n):
            cnt[P][0] = 1
            for q in range(1, P + 1):
                a = int(per_level[q])
                if a == 0:
                    continue
                for p in range(q, P + 1):
                    cnt[P][p] += a * cnt[P - q][p - q]
        self.counts = cnt
        r2 = np.pi * (D0_RADIUS * 2.0 ** -np.arange(n)) ** 2
        self.area = np.array([sum(float(cnt[P][p]) * r2[p] for p in range(P + 1))
                              for P in range(n)])
        self._cdf: dict[int, np.ndarray] = {}

    def n_primaries(self, P: int) -> int:
        return int(self.level_start[min(P, self.P_max) + 1])

    def primary_weights(self, P: int) -> np.ndarray:
        """Covered area carried by each primary of ``T(P)`` (tile units)."""
        k = self.n_primaries(P)
        q = self.q[:k]
        return 4.0 ** (-q.astype(float)) * self.area[P - q]

    def cdf(self, P: int) -> np.ndarray:
        """Cumulative choice weights: index 0 is the big disk, then primaries."""
        if P not in self._cdf:
            w = np.concatenate([[np.pi * D0_RADIUS ** 2], self.primary_weights(P)])
            c = np.cumsum(w)
            self._cdf[P] = c / c[-1]
        return self._cdf[P]

    def locate(self, wx, wy, P: int):
        return kernels.pattern_locate(np.asarray(wx, float), np.asarray(wy, float), P,
                                      self.keys[:P + 1], self.level_start, D0_RADIUS)

    def sample(self, rng: np.random.Generator, P: np.ndarray):
        """Draw disks of ``T(P)`` with probability proportional to area.

        Returns ``(level, chain, cx, cy)`` with centers in tile units.
        """
        P = np.asarray(P, dtype=np.int64).copy()
        n = P.size
        depth = int(P.max(initial=0)) // 3 + 1
        chain = np.full((n, depth), -1, dtype=np.int64)
        level = np.zeros(n, dtype=np.int64)
        ox = np.zeros(n)
        oy = np.zeros(n)
        scale = np.ones(n)
        active = np.ones(n, dtype=bool)
        for step in range(depth):
            if not active.any():
                break
            for rem in np.unique(P[active]):
                sel = np.nonzero(active & (P == rem))[0]
                c = self.cdf(int(rem))
                pick = np.searchsorted(c, rng.random(sel.size), side="right")
                pick = np.minimum(pick, c.size - 1)
                done = pick == 0
                active[sel[done]] = False
                s = sel[~done]
                a = pick[~done] - 1
                chain[s, step] = a
                ox[s] += scale[s] * self.x[a]
                oy[s] += scale[s] * self.y[a]
                scale[s] *= 2.0 ** -self.q[a].astype(float)
                level[s] += self.q[a]
                P[s] -= self.q[a]
        return level, chain, ox + 0.5 * scale, oy + 0.5 * scale

    def disks(self, P: int, origin=(0.0, 0.0), scale=1.0, level0=0) -> Iterator[tuple]:
        """Lazily yield ``(level, chain, cx, cy)`` for every disk of ``T(P)``."""
        stack = [((), origin[0], origin[1], scale, level0, P)]
        while stack:
            chain, ox, oy, s, lev, rem = stack.pop()
            yield lev, chain, ox + 0.5 * s, oy + 0.5 * s
            k = self.n_primaries(rem)
            for a in range(k - 1, -1, -1):
                q = int(self.q[a])
                stack.append((chain + (a,), ox + s * self.x[a], oy + s * self.y[a],
                              s * 2.0 ** -q, lev + q, rem - q))

    def check_structure(self, P: int) -> bool:
        """Primaries of ``T(P)`` are pairwise interior-disjoint squares inside the
        tile and disjoint from the big disk; disjointness of the full pattern
        follows by self-similarity."""
        k = self.n_primaries(P)
        if k == 0:
            return True
        x, y, q = self.x[:k], self.y[:k], self.q[:k]
        h = 2.0 ** -q.astype(float)
        if np.any(x < 0) or np.any(y < 0) or np.any(x + h > 1) or np.any(y + h > 1):
            return False
        qx = np.clip(0.5, x, x + h)
        qy = np.clip(0.5, y, y + h)
        if np.any(np.hypot(qx - 0.5, qy - 0.5) <= D0_RADIUS):
            return False
        # dyadic squares are either disjoint or nested; no primary may contain another
        for qq in range(4, P + 1):
            kx = self.keys[qq] >> qq
            ky = self.keys[qq] & ((1 << qq) - 1)
            for lev in range(3, qq):
                shift = qq - lev
                pk = (kx >> shift) * (1 << lev) + (ky >> shift)
                if np.isin(pk, self.keys[lev]).any():
                    return False
        return True


@functools.lru_cache(maxsize=4)
def _pattern_cached(P_max: int) -> TilePattern:
    return TilePattern(P_max)


def tile_pattern(P: int) -> TilePattern:
    """Shared pattern covering at least ``P`` passes (built in steps of 4)."""
    if P > 22:
        raise PackingError(f"{P} passes exceed the supported maximum of 22")
    return _pattern_cached(min(22, max(8, 4 * math.ceil(P / 4))))


# --------------------------------------------------------------------------
# groups and packings


@dataclass
class PackingGroup:
    """All disks of one pass: common radius ``R``, count ``m``."""

    R: float
    sigma: float
    m: int
    level: int
    _centers_fn: object = field(default=None, repr=False, compare=False)

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    @property
    def log_sigma(self) -> float:
        return math.log(self.sigma)

    def iter_centers(self) -> Iterator[complex]:
        return self._centers_fn()

    @property
    def centers(self) -> np.ndarray:
        if self.m > MAX_EXPLICIT:
            raise MemoryError(f"group holds {self.m} disks; iterate with iter_centers()")
        return np.fromiter(self.iter_centers(), dtype=complex, count=self.m)


@dataclass
class Located:
    """Which disk of a packing contains each query point (``found`` mask)."""

    found: np.ndarray
    group: np.ndarray
    center: np.ndarray
    R: np.ndarray
    key: np.ndarray  # structured per-disk identifier


class GenerationPacking:
    """Common surface of explicit and lattice packings."""

    groups: list[PackingGroup]
    epsilon: float
    t: float
    K: float

    @property
    def coverage(self) -> float:
        return coverage_of(self)

    @property
    def n_disks(self) -> int:
        return sum(g.m for g in self.groups)

    @property
    def radius_cap(self) -> float:
        return max(g.R for g in self.groups)

    def group_arrays(self):
        R = np.array([g.R for g in self.groups])
        return np.log(R), np.array([g.log_sigma for g in self.groups])

    def weights(self) -> np.ndarray:
        """Per-disk share ``R_j**2 / c`` of the generation mass for each group."""
        R = np.array([g.R for g in self.groups])
        return R * R / self.coverage


def _make_group(R: float, m: int, level: int, t: float, K: float, centers_fn,
                sigma_max: float = SIGMA_MAX) -> PackingGroup:
    return PackingGroup(R=R, sigma=sigma_from_R(R, t, K, sigma_max), m=m, level=level,
                        _centers_fn=centers_fn)


class ExplicitPacking(GenerationPacking):
    """Packing given by explicit center lists (small configurations, tests)."""

    kind = "explicit"

    def __init__(self, radii, centers, t: float, K: float, epsilon: float = float("nan"),
                 sigma_max: float = SIGMA_MAX):
        self.t, self.K, self.epsilon = t, K, epsilon
        self.sigma_max = float(sigma_max)
        self._centers = [np.asarray(c, dtype=complex).ravel() for c in centers]
        self.groups = []
        for j, (R, c) in enumerate(zip(radii, self._centers)):
            self.groups.append(_make_group(float(R), int(c.size), j, t, K,
                                           functools.partial(iter, c.tolist()), sigma_max))
        self._all_c = np.concatenate(self._centers) if self._centers else np.zeros(0, complex)
        self._all_g = np.concatenate([np.full(c.size, j) for j, c in enumerate(self._centers)]) \
            if self._centers else np.zeros(0, int)
        self._all_R = np.array([self.groups[j].R for j in self._all_g]) if self._all_g.size else np.zeros(0)

    def disks(self):
        return self._all_c, self._all_R, self._all_g

    def locate(self, u) -> Located:
        u = np.asarray(u, dtype=complex).ravel()
        n = u.size
        found = np.zeros(n, dtype=bool)
        grp = np.full(n, -1, dtype=np.int64)
        cen = np.zeros(n, dtype=complex)
        R = np.zeros(n)
        key = np.full(n, -1, dtype=np.int64)
        if self._all_c.size == 0:
            return Located(found, grp, cen, R, key)
        if self._all_c.size * n <= 4_000_000:
            d = np.abs(u[:, None] - self._all_c[None, :])
            inside = d <= self._all_R[None, :]
            hit = inside.any(axis=1)
            k = np.argmax(inside, axis=1)
        else:
            from scipy.spatial import cKDTree
            tree = cKDTree(np.c_[self._all_c.real, self._all_c.imag])
            rmax = float(self._all_R.max())
            lists = tree.query_ball_point(np.c_[u.real, u.imag], rmax)
            hit = np.zeros(n, dtype=bool)
            k = np.zeros(n, dtype=np.int64)
            for i, cand in enumerate(lists):
                for c in cand:
                    if abs(u[i] - self._all_c[c]) <= self._all_R[c]:
                        hit[i], k[i] = True, c
                        break
        found[:] = hit
        key[hit] = k[hit]
        grp[hit] = self._all_g[k[hit]]
        cen[hit] = self._all_c[k[hit]]
        R[hit] = self._all_R[k[hit]]
        return Located(found, grp, cen, R, key)

    def sample(self, rng: np.random.Generator, n: int):
        """Mass-proportional disk draw: ``(group, center, key)``."""
        w = self._all_R ** 2
        k = rng.choice(self._all_c.size, size=n, p=w / w.sum())
        return self._all_g[k], self._all_c[k], k

    def iter_disks(self):
        for k in range(self._all_c.size):
            yield int(self._all_g[k]), complex(self._all_c[k]), k

    def key_tuple(self, key) -> tuple:
        return (int(key),)

    def disk_from_key(self, key: tuple):
        k = key[0]
        return int(self._all_g[k]), complex(self._all_c[k])

    def to_dict(self) -> dict:
        return {"kind": "explicit", "t": repr(self.t), "K": repr(self.K),
                "epsilon": repr(self.epsilon), "sigma_max": repr(self.sigma_max),
                "groups": [{"R": repr(g.R), "sigma": repr(g.sigma), "m": g.m,
                            "centers": [[repr(c.real), repr(c.imag)] for c in cs]}
                           for g, cs in zip(self.groups, self._centers)]}

    @classmethod
    def from_dict(cls, d: dict) -> "ExplicitPacking":
        radii = [float(g["R"]) for g in d["groups"]]
        centers = [[complex(float(a), float(b)) for a, b in g["centers"]] for g in d["groups"]]
        return cls(radii, centers, float(d["t"]), float(d["K"]), float(d["epsilon"]),
                   sigma_max=float(d.get("sigma_max", SIGMA_MAX)))


class LatticePacking(GenerationPacking):
    """Lattice of mesh tiles sharing one :class:`TilePattern`, plus explicit
    refinement of the tiles that cross the unit circle."""

    kind = "lattice"

    def __init__(self, delta: float, off_x: float, off_y: float, passes: int, t: float,
                 K: float, epsilon: float = float("nan"), boundary=None, n_interior=None,
                 sigma_max: float = SIGMA_MAX):
        self.delta, self.off_x, self.off_y = float(delta), float(off_x), float(off_y)
        self.P = int(passes)
        self.t, self.K, self.epsilon = t, K, epsilon
        self.sigma_max = float(sigma_max)
        self.pattern = tile_pattern(self.P)
        self.ix_lo, self.ix_hi = kernels.column_bounds(self.delta, self.off_x)
        self.iy_lo, self.iy_hi = kernels.column_bounds(self.delta, self.off_y)
        self.n_interior = (int(n_interior) if n_interior is not None else
                           kernels.count_interior_tiles(self.delta, self.off_x, self.off_y))
        if boundary is None:
            boundary = boundary_roots(self.delta, self.off_x, self.off_y, self.P)
            self._boundary_level = self.P
        else:
            self._boundary_level = max(self.P, int(np.max(boundary["q"], initial=0)))
        self.boundary_all = {k: np.asarray(v, dtype=np.int64) for k, v in boundary.items()}
        self.boundary = self.boundary_all
        sel = self.boundary["q"] <= self.P
        self.boundary = {k: v[sel] for k, v in self.boundary.items()}
        self._bkey_sorted = None
        self._build_groups(sigma_max)

    # -- bookkeeping
    def _level_counts(self) -> list[int]:
        P = self.P
        cnt = [self.n_interior * c for c in self.pattern.counts[P][:P + 1]]
        for q in self.boundary["q"].tolist():
            sub = self.pattern.counts[P - q]
            for p in range(P - q + 1):
                cnt[p + q] += sub[p]
        return cnt

    def _build_groups(self, sigma_max):
        cnt = self._level_counts()
        self.groups = []
        self.level_to_group = np.full(self.P + 1, -1, dtype=np.int64)
        for p, m in enumerate(cnt):
            if m == 0:
                continue
            R = D0_RADIUS * self.delta * 2.0 ** -p
            self.level_to_group[p] = len(self.groups)
            self.groups.append(_make_group(R, int(m), p, self.t, self.K,
                                           functools.partial(self._iter_level, p), sigma_max))
        area = self.n_interior * self.pattern.area[self.P] * self.delta ** 2
        bq = self.boundary["q"]
        if bq.size:
            area += float(np.sum((self.delta * 2.0 ** -bq.astype(float)) ** 2
                                 * self.pattern.area[self.P - bq]))
        self._coverage_direct = area / math.pi

    def with_passes(self, passes: int) -> "LatticePacking":
        return LatticePacking(self.delta, self.off_x, self.off_y, passes, self.t, self.K,
                              self.epsilon, n_interior=self.n_interior,
                              boundary=self.boundary_all if passes <= self._boundary_level else None,
                              sigma_max=self.sigma_max)

    # -- geometry
    def tile_of(self, u):
        u = np.asarray(u, dtype=complex)
        fx = (u.real - self.off_x) / self.delta
        fy = (u.imag - self.off_y) / self.delta
        ix = np.floor(fx).astype(np.int64)
        iy = np.floor(fy).astype(np.int64)
        return ix, iy, fx - ix, fy - iy

    def tile_origin(self, ix, iy):
        return (self.off_x + np.asarray(ix, float) * self.delta
                + 1j * (self.off_y + np.asarray(iy, float) * self.delta))

    def is_interior(self, ix, iy):
        return kernels.tile_is_interior(ix, iy, self.delta, self.off_x, self.off_y)

    def _boundary_lookup(self):
        if self._bkey_sorted is None:
            b = self.boundary
            key = _bkey(b["ix"], b["iy"], b["q"], b["kx"], b["ky"])
            order = np.argsort(key)
            self._bkey_sorted = (key[order], order)
        return self._bkey_sorted

    def locate(self, u) -> Located:
        u = np.asarray(u, dtype=complex).ravel()
        n = u.size
        found = np.zeros(n, dtype=bool)
        grp = np.full(n, -1, dtype=np.int64)
        cen = np.zeros(n, dtype=complex)
        R = np.zeros(n)
        depth = self.P // 3 + 1
        key = np.zeros(n, dtype=key_dtype(depth))
        key["root"] = -1
        key["chain"] = -1
        if n == 0:
            return Located(found, grp, cen, R, key)
        inside = np.abs(u) < 1.0
        ix, iy, wx, wy = self.tile_of(u)
        interior = inside & self.is_interior(ix, iy)
        # roots: interior tiles are level-0 roots with P passes
        rx = np.where(interior, wx, np.nan)
        ry = np.where(interior, wy, np.nan)
        rP = np.full(n, self.P, dtype=np.int64)
        rlev = np.zeros(n, dtype=np.int64)
        rscale = np.full(n, self.delta)
        rorig = self.tile_origin(ix, iy)
        root = np.full(n, -1, dtype=np.int64)
        bsel = np.nonzero(inside & ~interior)[0]
        if bsel.size and self.boundary["q"].size:
            keys, order = self._boundary_lookup()
            for q in range(0, int(self.boundary["q"].max()) + 1):
                m = 1 << q
                kx = np.minimum(np.floor(wx[bsel] * m), m - 1).astype(np.int64)
                ky = np.minimum(np.floor(wy[bsel] * m), m - 1).astype(np.int64)
                k = _bkey(ix[bsel], iy[bsel], np.full(bsel.size, q), kx, ky)
                pos = np.minimum(np.searchsorted(keys, k), keys.size - 1)
                ok = (keys[pos] == k) & np.isnan(rx[bsel])
                s = bsel[ok]
                b = order[pos[ok]]
                root[s] = b
                rx[s] = wx[s] * m - kx[ok]
                ry[s] = wy[s] * m - ky[ok]
                rP[s] = self.P - q
                rlev[s] = q
                rscale[s] = self.delta / m
                rorig[s] = rorig[s] + self.delta / m * (kx[ok] + 1j * ky[ok])
        cand = np.nonzero(~np.isnan(rx))[0]
        for Pv in np.unique(rP[cand]):
            s = cand[rP[cand] == Pv]
            f, lev, ch, cx, cy = self.pattern.locate(rx[s], ry[s], int(Pv))
            s_f = s[f]
            lev_f = lev[f] + rlev[s_f]
            found[s_f] = True
            grp[s_f] = self.level_to_group[lev_f]
            cen[s_f] = rorig[s_f] + rscale[s_f] * (cx[f] + 1j * cy[f])
            R[s_f] = D0_RADIUS * self.delta * 2.0 ** -lev_f.astype(float)
            key["ix"][s_f] = ix[s_f]
            key["iy"][s_f] = iy[s_f]
            key["root"][s_f] = root[s_f]
            key["chain"][s_f, :ch.shape[1]] = ch[f]
        return Located(found, grp, cen, R, key)

    def sample(self, rng: np.random.Generator, n: int):
        """Mass-proportional disk draw: ``(group, center, key)``."""
        area_int = self.n_interior * self.pattern.area[self.P] * self.delta ** 2
        bq = self.boundary["q"]
        barea = (self.delta * 2.0 ** -bq.astype(float)) ** 2 * self.pattern.area[self.P - bq] \
            if bq.size else np.zeros(0)
        w = np.concatenate([[area_int], barea])
        which = rng.choice(w.size, size=n, p=w / w.sum()) - 1
        ix = np.zeros(n, dtype=np.int64)
        iy = np.zeros(n, dtype=np.int64)
        rP = np.full(n, self.P, dtype=np.int64)
        rlev = np.zeros(n, dtype=np.int64)
        rscale = np.full(n, self.delta)
        orig = np.zeros(n, dtype=complex)
        itl = np.nonzero(which < 0)[0]
        if itl.size:
            tx, ty = self._random_interior_tiles(rng, itl.size)
            ix[itl], iy[itl] = tx, ty
            orig[itl] = self.tile_origin(tx, ty)
        btl = np.nonzero(which >= 0)[0]
        if btl.size:
            b = which[btl]
            B = self.boundary
            ix[btl], iy[btl] = B["ix"][b], B["iy"][b]
            q = B["q"][b]
            rP[btl] = self.P - q
            rlev[btl] = q
            rscale[btl] = self.delta * 2.0 ** -q.astype(float)
            orig[btl] = self.tile_origin(ix[btl], iy[btl]) + rscale[btl] * (B["kx"][b] + 1j * B["ky"][b])
        lev, ch, cx, cy = self.pattern.sample(rng, rP)
        lev = lev + rlev
        center = orig + rscale * (cx + 1j * cy)
        depth = self.P // 3 + 1
        key = np.zeros(n, dtype=key_dtype(depth))
        key["ix"], key["iy"] = ix, iy
        key["root"] = np.where(which >= 0, which, -1)
        key["chain"] = -1
        key["chain"][:, :ch.shape[1]] = ch
        return self.level_to_group[lev], center, key

    def _random_interior_tiles(self, rng, n):
        out_x = np.zeros(0, dtype=np.int64)
        out_y = np.zeros(0, dtype=np.int64)
        while out_x.size < n:
            k = max(64, int(1.4 * (n - out_x.size)))
            tx = rng.integers(self.ix_lo, self.ix_hi + 1, size=k)
            ty = rng.integers(self.iy_lo, self.iy_hi + 1, size=k)
            ok = self.is_interior(tx, ty)
            out_x = np.concatenate([out_x, tx[ok]])
            out_y = np.concatenate([out_y, ty[ok]])
        return out_x[:n], out_y[:n]

    def _iter_roots(self):
        """Yield ``(origin, scale, level, passes, ix, iy, root)`` for every root."""
        for ix in range(self.ix_lo, self.ix_hi + 1):
            lo, hi = kernels.column_range(np.array([ix]), self.delta, self.off_x, self.off_y)
            for iy in range(int(lo[0]), int(hi[0]) + 1):
                yield self.tile_origin(ix, iy), self.delta, 0, self.P, ix, iy, -1
        B = self.boundary
        for b in range(B["q"].size):
            q = int(B["q"][b])
            s = self.delta * 2.0 ** -q
            o = self.tile_origin(B["ix"][b], B["iy"][b]) + s * (B["kx"][b] + 1j * B["ky"][b])
            yield o, s, q, self.P - q, int(B["ix"][b]), int(B["iy"][b]), b

    def iter_disks(self):
        for o, s, q, Pr, ix, iy, b in self._iter_roots():
            for lev, chain, cx, cy in self.pattern.disks(Pr):
                yield int(self.level_to_group[lev + q]), complex(o + s * (cx + 1j * cy)), \
                    (ix, iy, b) + tuple(chain)

    def _iter_level(self, p):
        for j, c, _ in self.iter_disks():
            if self.groups[j].level == p:
                yield c

    def key_tuple(self, key) -> tuple:
        ch = tuple(int(a) for a in key["chain"] if a >= 0)
        return (int(key["ix"]), int(key["iy"]), int(key["root"])) + ch

    def disk_from_key(self, key: tuple):
        ix, iy, b = key[:3]
        chain = key[3:]
        if b < 0:
            o, s, q, Pr = self.tile_origin(ix, iy), self.delta, 0, self.P
        else:
            B = self.boundary
            q = int(B["q"][b])
            s = self.delta * 2.0 ** -q
            o = self.tile_origin(ix, iy) + s * (B["kx"][b] + 1j * B["ky"][b])
            Pr = self.P - q
        lev = q
        pat = self.pattern
        for a in chain:
            o = o + s * (pat.x[a] + 1j * pat.y[a])
            s = s * 2.0 ** -int(pat.q[a])
            lev += int(pat.q[a])
        return int(self.level_to_group[lev]), complex(o + (0.5 + 0.5j) * s)

    def to_dict(self) -> dict:
        return {"kind": "lattice", "t": repr(self.t), "K": repr(self.K),
                "epsilon": repr(self.epsilon), "delta": repr(self.delta),
                "off_x": repr(self.off_x), "off_y": repr(self.off_y), "passes": self.P,
                "sigma_max": repr(self.sigma_max),
                "n_interior": str(self.n_interior),
                "boundary": {k: v.tolist() for k, v in self.boundary.items()},
                "groups": [{"R": repr(g.R), "sigma": repr(g.sigma), "m": str(g.m),
                            "level": g.level} for g in self.groups],
                "coverage": repr(float(self.coverage))}

    @classmethod
    def from_dict(cls, d: dict) -> "LatticePacking":
        b = {k: np.asarray(v, dtype=np.int64) for k, v in d["boundary"].items()}
        p = cls(float(d["delta"]), float(d["off_x"]), float(d["off_y"]), int(d["passes"]),
                float(d["t"]), float(d["K"]), float(d["epsilon"]), boundary=b,
                n_interior=int(d["n_interior"]),
                sigma_max=float(d.get("sigma_max", SIGMA_MAX)))
        for g, gd in zip(p.groups, d["groups"]):
            if repr(g.R) != gd["R"] or str(g.m) != str(gd["m"]):
                raise ValueError("stored group table disagrees with the regenerated packing")
        return p


def key_dtype(depth: int) -> np.dtype:
    return np.dtype([("ix", np.int64), ("iy", np.int64), ("root", np.int64),
                     ("chain", np.int64, (depth,))])


def _bkey(ix, iy, q, kx, ky):
    ix = np.asarray(ix, dtype=np.int64)
    iy = np.asarray(iy, dtype=np.int64)
    q = np.asarray(q, dtype=np.int64)
    # tile ids stay below 2**14 per axis whenever the boundary is refined
    return ((((ix + 8192) * 16384 + (iy + 8192)) * 32 + q) << 34) + \
        (np.asarray(kx, np.int64) << 17) + np.asarray(ky, np.int64)


def boundary_roots(delta: float, off_x: float, off_y: float, max_level: int) -> dict:
    """Accepted squares inside tiles that cross the unit circle.

    Returns arrays ``ix, iy, q, kx, ky``: the square of level ``q`` at position
    ``(kx, ky)`` of tile ``(ix, iy)``. Empty when the tiles are too many to
    refine (their total area is then ``O(delta)``).
    """
    empty = {k: np.zeros(0, dtype=np.int64) for k in ("ix", "iy", "q", "kx", "ky")}
    n_est = 8.0 / delta
    if n_est > BOUNDARY_TILE_BUDGET or 2.0 / delta > 16000:
        return empty
    ix_lo, ix_hi = kernels.column_bounds(delta, off_x)
    iy_lo, iy_hi = kernels.column_bounds(delta, off_y)
    gx, gy = np.meshgrid(np.arange(ix_lo, ix_hi + 1), np.arange(iy_lo, iy_hi + 1), indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    x0 = off_x + gx * delta
    y0 = off_y + gy * delta
    crosses = (_near_norm(x0, y0, delta) < 1.0) & ~kernels.tile_is_interior(gx, gy, delta, off_x, off_y)
    cx, cy = gx[crosses], gy[crosses]
    kx = np.zeros(cx.size, dtype=np.int64)
    ky = np.zeros(cx.size, dtype=np.int64)
    out = {k: [] for k in empty}
    for q in range(1, max_level + 1):
        if 4 * cx.size > BOUNDARY_CELL_BUDGET:
            break
        h = delta / (1 << q)
        kx = np.concatenate([2 * kx, 2 * kx + 1, 2 * kx, 2 * kx + 1])
        ky = np.concatenate([2 * ky, 2 * ky, 2 * ky + 1, 2 * ky + 1])
        cx = np.tile(cx, 4)
        cy = np.tile(cy, 4)
        x0 = off_x + cx * delta + kx * h
        y0 = off_y + cy * delta + ky * h
        far = _far_norm(x0, y0, h)
        near = _near_norm(x0, y0, h)
        acc = far < 1.0
        for k, v in zip(("ix", "iy", "q", "kx", "ky"), (cx[acc], cy[acc], np.full(acc.sum(), q), kx[acc], ky[acc])):
            out[k].append(v)
        keep = ~acc & (near < 1.0)
        cx, cy, kx, ky = cx[keep], cy[keep], kx[keep], ky[keep]
    if not out["q"]:
        return empty
    return {k: np.concatenate(v).astype(np.int64) for k, v in out.items()}


def _far_norm(x0, y0, h):
    xm = np.maximum(np.abs(x0), np.abs(x0 + h))
    ym = np.maximum(np.abs(y0), np.abs(y0 + h))
    return np.hypot(xm, ym)


def _near_norm(x0, y0, h):
    xn = np.where((x0 <= 0) & (x0 + h >= 0), 0.0, np.minimum(np.abs(x0), np.abs(x0 + h)))
    yn = np.where((y0 <= 0) & (y0 + h >= 0), 0.0, np.minimum(np.abs(y0), np.abs(y0 + h)))
    return np.hypot(xn, yn)


# --------------------------------------------------------------------------
# public operations


def epsilon_schedule(N: int, eps1: float = 0.05) -> float:
    """Gap fraction of generation ``N``: ``eps1 * 2**(1-N)``."""
    if N < 1:
        raise ValueError("generation index starts at 1")
    return eps1 * 2.0 ** (1 - N)


def default_radius_cap(N: int, t: float, K: float, sigma_max: float = SIGMA_MAX) -> float:
    return min(max_R_for_sigma_bound(t, K, sigma_max), 2.0 ** (-N - 3))


def coverage_of(p) -> float:
    """Normalized covered area ``sum_j m_j R_j**2`` (unit disk has area 1)."""
    if p is None:
        return 0.0
    if isinstance(p, LatticePacking):
        return p._coverage_direct
    return float(sum(g.m * g.R * g.R for g in p.groups))


def pack_unit_disk(epsilon: float, delta: float, t: float, K: float, seed: int = 0,
                   max_passes: int = 20, sigma_max: float = SIGMA_MAX) -> LatticePacking:
    """Pack the unit disk to coverage ``>= 1 - epsilon`` with radii ``< delta``.

    The mesh of the first pass has side ``delta``; ``seed`` fixes the mesh
    offset. Raises :class:`PackingError` when ``max_passes`` passes do not
    reach the target.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    cap = max_R_for_sigma_bound(t, K, sigma_max)
    if not (0.0 < delta <= cap * (1 + 1e-12)):
        raise ValueError(f"radius cap {delta!r} exceeds the sigma bound cap {cap!r}")
    rng = np.random.default_rng(seed)
    off_x, off_y = rng.random(2) * delta
    n_int = kernels.count_interior_tiles(delta, off_x, off_y)
    broots = boundary_roots(delta, off_x, off_y, max_passes)
    bq = broots["q"]
    target = (1.0 - epsilon) * math.pi
    area = 0.0
    for P in range(0, max_passes + 1):
        # the pattern is only grown as far as needed
        pat = tile_pattern(P)
        area = n_int * pat.area[P] * delta ** 2
        sel = bq <= P
        if sel.any():
            area += float(np.sum((delta * 2.0 ** -bq[sel].astype(float)) ** 2 * pat.area[P - bq[sel]]))
        if area >= target:
            p = LatticePacking(delta, off_x, off_y, P, t, K, epsilon, boundary=broots,
                               n_interior=n_int, sigma_max=sigma_max)
            p._boundary_level = max_passes
            return p
    raise PackingError(
        f"coverage {area / math.pi:.6f} < 1 - epsilon = {1 - epsilon:.6f} after {max_passes} passes; "
        "decrease delta or raise epsilon")


def validate_disjoint(p) -> bool:
    """True iff all disks are pairwise disjoint (tangency allowed) and lie in
    the closed unit disk.

    Explicit packings are checked pairwise with a uniform grid; lattice
    packings structurally (tile pattern, interior tiles, boundary squares).
    """
    if isinstance(p, LatticePacking):
        return _validate_lattice(p)
    c, R, _ = p.disks()
    return _validate_explicit(c, R)


def _validate_explicit(c: np.ndarray, R: np.ndarray, tol: float = 1e-12) -> bool:
    if c.size == 0:
        return True
    if np.any(np.abs(c) + R > 1.0 + tol):
        return False
    cell = 2.0 * float(R.max())
    gx = np.floor(c.real / cell).astype(np.int64)
    gy = np.floor(c.imag / cell).astype(np.int64)
    buckets: dict[tuple, list[int]] = {}
    for i, k in enumerate(zip(gx.tolist(), gy.tolist())):
        buckets.setdefault(k, []).append(i)
    for (bx, by), members in buckets.items():
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(buckets.get((bx + dx, by + dy), ()))
        cand = np.array(cand)
        for i in members:
            others = cand[cand > i]
            if others.size == 0:
                continue
            d = np.abs(c[others] - c[i])
            scale = np.maximum(1.0, d)
            if np.any(d < (R[others] + R[i]) - tol * scale):
                return False
    return True


def _validate_lattice(p: LatticePacking) -> bool:
    if not p.pattern.check_structure(p.P):
        return False
    # every interior tile closure inside the open unit disk: extreme rows per column
    if kernels.column_violations(p.delta, p.off_x, p.off_y):
        return False
    B = p.boundary
    if B["q"].size:
        h = p.delta * 2.0 ** -B["q"].astype(float)
        x0 = p.off_x + B["ix"] * p.delta + B["kx"] * h
        y0 = p.off_y + B["iy"] * p.delta + B["ky"] * h
        if np.any(_far_norm(x0, y0, h) >= 1.0):
            return False
        if np.any(p.is_interior(B["ix"], B["iy"])):
            return False
        # squares within one tile must not nest: check ancestors at coarser levels
        key = set(zip(B["ix"].tolist(), B["iy"].tolist(), B["q"].tolist(), B["kx"].tolist(), B["ky"].tolist()))
        for ixv, iyv, q, kx, ky in key:
            for qq in range(0, q):
                s = q - qq
                if (ixv, iyv, qq, kx >> s, ky >> s) in key:
                    return False
    return True


def packing_from_dict(d: dict) -> GenerationPacking:
    if d["kind"] == "lattice":
        return LatticePacking.from_dict(d)
    if d["kind"] == "explicit":
        return ExplicitPacking.from_dict(d)
    raise ValueError(f"unknown packing kind {d['kind']!r}")


def packing_log_sigma(R: float, t: float, K: float) -> float:
    return log_sigma_from_log_R(math.log(R), t, K)
