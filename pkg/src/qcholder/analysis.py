"""Numerical checks of the construction: dimensions, Hoelder exponents,
the Jacobian integral bound and the exponent identities.

Samples are split into fixed-size shards with independent seeds derived
from the caller's seed, so results do not depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import exponents, measure as msr, packing, qcmap, radial, spatial, tree
from .tree import ConstructionPlan, sample_paths

SHARD = 2048
BAND_WIDTH = 4.0 * math.log(2.0)


class SaturationError(ValueError):
    """Requested grid is finer than the sampled cells can resolve."""


@dataclass
class ScalingFit:
    """Least-squares line through ``(scales, statistics)``.

    ``scales`` are log radii, strictly decreasing; ``residual`` is the
    largest deviation of a point from the line.
    """

    scales: np.ndarray
    statistics: np.ndarray
    slope: float
    residual: float
    intercept: float = 0.0

    @classmethod
    def fit(cls, scales, statistics, sign: float = 1.0) -> "ScalingFit":
        s = np.asarray(scales, dtype=float)
        y = np.asarray(statistics, dtype=float)
        order = np.argsort(-s)
        s, y = s[order], y[order]
        if s.size < 3 or np.any(np.diff(s) >= 0):
            raise ValueError("need at least 3 distinct scales")
        slope, icpt = np.polyfit(sign * s, y, 1)
        res = float(np.max(np.abs(y - (slope * sign * s + icpt))))
        return cls(s, y, float(slope), res, float(icpt))

    def to_dict(self) -> dict:
        return {"slope": self.slope, "residual": self.residual, "intercept": self.intercept,
                "points": int(self.scales.size)}


def _shard_seeds(seed: int, n: int, size: int = SHARD):
    """``(count, seed)`` per shard; depends only on ``seed`` and ``n``."""
    k = max(1, -(-n // size))
    ss = np.random.SeedSequence(seed).spawn(k)
    counts = [size] * (k - 1) + [n - size * (k - 1)]
    return [(c, int(s.generate_state(1)[0])) for c, s in zip(counts, ss)]


def _run_shards(fn, args, n: int, seed: int, workers: int = 1):
    jobs = _shard_seeds(seed, n)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as ex:
            futs = [ex.submit(fn, *args, c, s) for c, s in jobs]
            return [f.result() for f in futs]
    return [fn(*args, c, s) for c, s in jobs]


def _cumulative(tab: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Per-path cumulative sums of ``tab`` along the depth, with a leading 0."""
    n, N = groups.shape
    if N == 0:
        return np.zeros((n, 1))
    lv = np.arange(N)
    vals = np.where(groups >= 0, tab[lv[None, :], np.maximum(groups, 0)], 0.0)
    return np.concatenate([np.zeros((n, 1)), np.cumsum(vals, axis=1)], axis=1)




# --------------------------------------------------------------------------
# box dimension


def _grid_count(points: np.ndarray, level: int) -> int:
    h = 2.0 ** -level
    ix = np.floor(points.real / h).astype(np.int64)
    iy = np.floor(points.imag / h).astype(np.int64)
    return int(np.unique(ix * (1 << 40) + iy).size)


def box_dimension(plan: ConstructionPlan, side: str = "source", depth: int | None = None,
                  grid_levels: int | None = None, samples: int = 10 ** 6, seed: int = 0) -> ScalingFit:
    """Box-counting slope of the depth-``depth`` set on the given side.

    Depth 0 is the unit disk and is counted on a literal dyadic grid. For
    deeper sets the occupied box count at side ``s`` is
    ``E[min(1/mu(C), pi (r_P/s)**2 / mu(P))]`` over sampled cells, where
    ``C`` is the first ancestor with radius ``<= s`` and ``P`` its parent:
    separated cells occupy one box each, densely packed ones fill their
    parent. The sides run over dyadic levels from the typical depth-1 cell
    size down to ``2**-grid_levels`` (default: the typical depth-``depth``
    cell size).
    """
    if side not in ("source", "target"):
        raise ValueError(f"unknown side {side!r}")
    N = plan.N_max if depth is None else depth
    rng = np.random.default_rng(seed)
    if N == 0:
        L = 7 if grid_levels is None else grid_levels
        if L < 3:
            raise ValueError("grid_levels must be >= 3")
        need = 100 * 4 ** L
        if need > 4 * samples:
            raise SaturationError(f"grid level {L} needs {need} samples; lower grid_levels")
        n = max(samples, need)
        pts = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
        levels = np.arange(1, L + 1)
        counts = [math.log(_grid_count(pts, int(m))) for m in levels]
        return ScalingFit.fit(-levels * math.log(2.0), counts, sign=-1.0)
    tab = plan.tab_log_g if side == "source" else plan.tab_log_rho
    b = sample_paths(plan, N, samples, int(rng.integers(2 ** 63)))
    lr = _cumulative(tab, b.groups)
    lm = _cumulative(plan.tab_log_share, b.groups)
    ln2 = math.log(2.0)
    top = math.floor(-np.median(lr[:, 1]) / ln2)
    floor = -np.median(lr[:, N]) / ln2
    bottom = math.floor(floor) if grid_levels is None else int(grid_levels)
    if bottom > floor:
        raise SaturationError(f"boxes of side 2**-{bottom} are below the depth-{N} cell size "
                              f"2**-{floor:.1f}; lower grid_levels or raise the depth")
    if bottom - top < 2:
        raise SaturationError("fewer than 3 grid levels between depth-1 and depth-N cells")
    levels = np.arange(top, bottom + 1)
    rows = np.arange(len(b))
    stats = []
    for m in levels:
        s = -m * ln2
        below = lr <= s
        ok = below.any(axis=1)
        k = np.argmax(below, axis=1)
        kp = np.maximum(k - 1, 0)
        cells = -lm[rows, k]
        fill = math.log(math.pi) + 2.0 * (lr[rows, kp] - s) - lm[rows, kp]
        w = np.where(k > 0, np.minimum(cells, fill), cells)[ok]
        top_w = w.max()
        stats.append(top_w + math.log(np.mean(np.exp(w - top_w))))
    return ScalingFit.fit(-levels * ln2, stats, sign=-1.0)


# --------------------------------------------------------------------------
# Hoelder exponents of the map


@dataclass
class HolderResult:
    """Sup envelope per octave of ``log|d|`` and its slope; optional
    extremal-pair fit."""

    fit: ScalingFit
    log_sep: np.ndarray
    log_diff: np.ndarray
    extremal: ScalingFit | None = None

    def to_dict(self) -> dict:
        out = {"slope": self.fit.slope, "residual": self.fit.residual, "pairs": int(self.log_sep.size)}
        if self.extremal is not None:
            out["extremal_slope"] = self.extremal.slope
        return out


def envelope(log_sep, log_diff, width: float = math.log(2.0), min_count: int = 20):
    """Sup of ``log_diff`` per band of ``log_sep``; returns band centers, coarse to fine."""
    edges, sup = msr.band_sups(log_sep, log_diff, width, min_count)
    order = np.argsort(-edges)
    return edges[order] + 0.5 * width, sup[order]


def _holder_shard(plan: ConstructionPlan, N: int, source: str, count: int, seed: int):
    rng = np.random.default_rng(seed)
    b = sample_paths(plan, max(N, 1), count, int(rng.integers(2 ** 63))) if N else None
    if N == 0:
        u = np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
        d = 2.0 ** -rng.uniform(1, 40, count) * np.exp(2j * np.pi * rng.random(count))
        return np.log(np.abs(d)), np.log(np.abs(d))
    lg = _cumulative(plan.tab_log_g, b.groups)
    lrho = _cumulative(plan.tab_log_rho, b.groups)
    ln2 = math.log(2.0)
    # absolute separations from 1/2 down to a quarter of the depth-N cell size
    log_d = rng.uniform(lg[:, N] - 2 * ln2, -ln2)
    fr = np.minimum(np.sum(lg[:, 1:N] >= log_d[:, None] + ln2, axis=1), N - 1)
    rows = np.arange(count)
    dl = np.exp(log_d - lg[rows, fr]) * np.exp(2j * np.pi * rng.random(count))
    if source == "uniform":
        u = np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
    else:
        j = b.groups[rows, fr]
        lr = plan.tab_log_R[fr, j]
        inner = rng.random(count) < 0.5
        lrad = np.where(inner, lr + plan.K * plan.tab_log_sigma[fr, j], lr)
        theta = np.exp(2j * np.pi * rng.random(count))
        u = b.centers[rows, fr] + np.exp(lrad) * theta - 0.5 * dl
    out_d = np.empty(count)
    out_f = np.empty(count)
    for k in np.unique(fr):
        sel = np.nonzero(fr == k)[0]
        pe = qcmap.evaluate_pair(plan, u[sel], dl[sel], int(k), N)
        out_d[sel] = np.log(np.abs(dl[sel])) + lg[sel, k]
        out_f[sel] = pe.log_abs_diff() + lrho[sel, k]
    return out_d, out_f


def extremal_pairs(plan: ConstructionPlan, depth: int | None = None, count: int = 200, seed: int = 0):
    """Pairs from a cell center to its core circle, one per depth ``1..N``.

    Returns ``(log separation, log image distance)``.
    """
    N = plan.N_max if depth is None else depth
    rng = np.random.default_rng(seed)
    b = sample_paths(plan, N, count, int(rng.integers(2 ** 63)))
    lg = _cumulative(plan.tab_log_g, b.groups)
    lrho = _cumulative(plan.tab_log_rho, b.groups)
    ls, lf = [], []
    for k in range(1, N + 1):
        j = b.groups[:, k - 1]
        core = plan.tab_log_g[k - 1, j]
        d = np.exp(core) * np.exp(2j * np.pi * rng.random(count))
        pe = qcmap.evaluate_pair(plan, b.centers[:, k - 1], d, k - 1, N)
        ls.append(core + lg[:, k - 1])
        lf.append(pe.log_abs_diff() + lrho[:, k - 1])
    return np.concatenate(ls), np.concatenate(lf)


def empirical_holder(plan: ConstructionPlan, pair_source: str = "boundary-straddling",
                     pairs: int = 10 ** 5, seed: int = 0, depth: int | None = None,
                     extremal: bool = True, workers: int = 1) -> HolderResult:
    """Slope of the per-octave sup of ``log|phi(u+d) - phi(u)|`` against ``log|d|``.

    ``boundary-straddling`` puts half the pairs across interface circles of
    the cell on a sampled path and half uniformly in that cell's frame.
    """
    if pair_source not in ("boundary-straddling", "uniform"):
        raise ValueError(f"unknown pair source {pair_source!r}")
    if pairs < 1000:
        raise ValueError("need at least 1000 pairs")
    N = plan.N_max if depth is None else depth
    parts = []
    if pair_source == "uniform":
        parts = _run_shards(_holder_shard, (plan, N, "uniform"), pairs, seed, workers)
    else:
        half = pairs // 2
        parts = _run_shards(_holder_shard, (plan, N, "straddle"), pairs - half, seed, workers)
        parts += _run_shards(_holder_shard, (plan, N, "uniform"), half, seed + 1, workers)
    ld = np.concatenate([p[0] for p in parts])
    lf = np.concatenate([p[1] for p in parts])
    sc, st = envelope(ld, lf)
    fit = ScalingFit.fit(sc, st, sign=-1.0)
    fit.slope = -fit.slope
    res = HolderResult(fit, ld, lf)
    if extremal and N > 0:
        es, ef = extremal_pairs(plan, N, 200, seed)
        ok = np.isfinite(ef)
        slope, icpt = np.polyfit(es[ok], ef[ok], 1)
        res.extremal = ScalingFit(np.sort(np.unique(es))[::-1], ef, float(slope),
                                  float(np.max(np.abs(ef[ok] - slope * es[ok] - icpt))), float(icpt))
    return res


# --------------------------------------------------------------------------
# the witness function


def _witness_shard(plan: ConstructionPlan, N: int, count: int, seed: int):
    rng = np.random.default_rng(seed)
    mu = msr.CantorMeasure(plan, "target")
    near = count // 2
    z = np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
    if N > 0 and near:
        # points close to depth-1 cells, where the image measure is concentrated
        b = sample_paths(plan, 1, near, int(rng.integers(2 ** 63)))
        lr = plan.tab_log_g[0, b.groups[:, 0]]
        off = np.exp(lr + math.log(2.0) * rng.uniform(-2.0, 6.0, near))
        z[:near] = b.centers[:, 0] + off * np.exp(2j * np.pi * rng.random(near))
    log_d = -math.log(2.0) * rng.uniform(1.0, 40.0, count)
    d = np.exp(log_d) * np.exp(2j * np.pi * rng.random(count))
    lf = msr.witness_pair(plan, mu, z, d, N)
    return log_d, lf


def witness_holder(plan: ConstructionPlan, pairs: int = 10 ** 4, seed: int = 0,
                   depth: int | None = None, workers: int = 1) -> HolderResult:
    """Sup-envelope slope of ``log|f(z+d) - f(z)|`` for ``f = C mu o phi``."""
    N = plan.N_max if depth is None else depth
    parts = _run_shards(_witness_shard, (plan, N), pairs, seed, workers)
    ld = np.concatenate([p[0] for p in parts])
    lf = np.concatenate([p[1] for p in parts])
    sc, st = envelope(ld, lf, width=2.0 * math.log(2.0))
    fit = ScalingFit.fit(sc, st, sign=-1.0)
    fit.slope = -fit.slope
    return HolderResult(fit, ld, lf)


def holomorphy_residual(plan: ConstructionPlan, points: int = 200, seed: int = 0,
                        depth: int | None = None, h: float = 1e-5, radius: float = 1.1) -> float:
    """Largest relative Cauchy-Riemann residual of the transform at ``|w| >= radius``.

    Five-point stencil: ``|d/dx + i d/dy| / (|d/dx| + |d/dy|)``.
    """
    rng = np.random.default_rng(seed)
    mu = msr.CantorMeasure(plan, "target")
    w = (radius + 2.0 * rng.random(points)) * np.exp(2j * np.pi * rng.random(points))
    pts = np.concatenate([w + h, w - h, w + 1j * h, w - 1j * h])
    v = msr.cauchy_transform(mu, pts, depth).value.reshape(4, points)
    dx = (v[0] - v[1]) / (2 * h)
    dy = (v[2] - v[3]) / (2 * h)
    return float(np.max(np.abs(dx + 1j * dy) / (np.abs(dx) + np.abs(dy))))


def witness_nonconstant(plan: ConstructionPlan, depth: int | None = None, seed: int = 0) -> float:
    """Spread ``max |f - f(0.5)|`` over a few points of the unit disk."""
    rng = np.random.default_rng(seed)
    mu = msr.CantorMeasure(plan, "target")
    z = np.concatenate([[0.5], 0.9 * np.sqrt(rng.random(16)) * np.exp(2j * np.pi * rng.random(16)),
                        [1.5, -2.0j]])
    f = msr.witness(plan, mu, z, depth).value
    return float(np.max(np.abs(f - f[0])))


# --------------------------------------------------------------------------
# the Jacobian integral


_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def _arc_angle(s, d, eps):
    """Half-angle of the circle ``|y| = s`` inside the disk ``D(d, eps)``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (s * s + d * d - eps * eps) / (2.0 * s * d)
    out = np.arccos(np.clip(np.nan_to_num(c, nan=-2.0, posinf=2.0, neginf=-2.0), -1.0, 1.0))
    out = np.where(d == 0.0, np.where(s < eps, np.pi, 0.0), out)
    return out


def annulus_image_area(d, eps, R, log_sigma, K):
    """Area of the stretched image of ``D(d, eps)`` intersected with the annulus
    ``sigma**K R <= |y| <= R``; ``d`` is the distance between the centers.

    In the image radius ``s'`` the area is ``integral theta(s) d(s'**2)``.
    Vectorized over disks.
    """
    d, eps, R, ls = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (d, eps, R, log_sigma))
    d, eps, R, ls = np.broadcast_arrays(d, eps, R, ls)
    lo = (R * np.exp(ls)) ** 2
    hi = R * R
    out = np.zeros(d.shape)
    # image-radius breakpoints of |d - eps| and d + eps
    def w_of(s):
        return R * R * np.clip(s / R, 0.0, None) ** (2.0 / K)
    pts = np.stack([lo, np.clip(w_of(np.abs(d - eps)), lo, hi), np.clip(w_of(d + eps), lo, hi), hi], 1)
    pts = np.sort(pts, axis=1)
    for a, b in zip(pts.T[:-1], pts.T[1:]):
        span = b - a
        sel = span > 0
        if not sel.any():
            continue
        # cosine substitution removes the square-root endpoint behaviour
        tau = 0.5 * np.pi * (_GL_X + 1.0)
        wq = a[sel, None] + span[sel, None] * 0.5 * (1.0 - np.cos(tau))[None, :]
        jac = span[sel, None] * 0.25 * np.pi * np.sin(tau)[None, :]
        s = R[sel, None] * (np.sqrt(wq) / R[sel, None]) ** K
        th = _arc_angle(s, d[sel, None], eps[sel, None])
        out[sel] += np.sum(th * jac * _GL_W[None, :], axis=1)
    return out


def _path_offsets(plan: ConstructionPlan, groups, centers, frame: int, depth: int):
    """``(group, center, x - center)`` per frame for the depth-``depth`` cell
    center ``x``; the offsets are formed without cancellation."""
    out = []
    x = 0j
    for k in range(depth - 1, frame - 1, -1):
        y = math.exp(plan.tab_log_g[k, groups[k]]) * x
        out.append((int(groups[k]), complex(centers[k]), y))
        x = centers[k] + y
    return out[::-1]


def _frame_image_area(plan: ConstructionPlan, k: int, N: int, x: complex, eps: float,
                      tol: float, path=()) -> float:
    """``integral over D(x, eps) and the unit disk of J`` for the frame at depth ``k``.

    ``path`` optionally lists ``(group, center, x - center)`` for the
    children holding ``x``, so that offsets below float resolution survive.
    """
    base = float(spatial.lens_area(abs(x), eps, 1.0))
    if k >= N or base == 0.0:
        return base
    gen = plan.generations[k]
    c, R, j = spatial.crossing_disks(gen, x, eps, tol * eps)
    if c.size == 0:
        return base
    d = np.abs(c - x)
    y = c - x
    mine = -1
    if path:
        hit = np.nonzero(np.abs(c - path[0][1]) < 0.5 * R)[0]
        if hit.size:
            mine = int(hit[0])
            y[mine] = -path[0][2]
            d[mine] = abs(path[0][2])
    ls = plan.tab_log_sigma[k, j]
    a = R * np.exp(plan.K * ls)           # source core radius
    rho = R * np.exp(ls)                  # image core radius
    total = base - float(np.sum(spatial.lens_area(d, eps, R)))
    total += float(np.sum(annulus_image_area(d, eps, R, ls, plan.K)))
    full = d + a <= eps
    total += float(np.sum(np.pi * rho[full] ** 2))
    part = np.nonzero(~full & (d - a < eps))[0]
    for i in part:
        sub = path[1:] if i == mine else ()
        inner = _frame_image_area(plan, k + 1, N, -y[i] / a[i], eps / a[i], tol, sub)
        total += rho[i] ** 2 * inner
    return total


def log_image_area(plan: ConstructionPlan, groups, centers, frame: int, tail: complex,
                   log_r: float, depth: int, tol: float = 1e-3, path=()) -> float:
    """``log |phi_N(D)|`` for a disk in path form (center ``tail`` in frame ``frame``).

    Below the top frame the disk must lie inside the frame's unit disk.
    Protecting disks crossing the boundary of ``D`` are handled exactly;
    those with radius below ``tol * eps`` are dropped, which changes the area
    by at most ``4 tol`` relative.
    """
    lg = sum(plan.tab_log_g[k, groups[k]] for k in range(frame))
    lrho = sum(plan.tab_log_rho[k, groups[k]] for k in range(frame))
    eps = math.exp(log_r - lg)
    area = _frame_image_area(plan, frame, depth, complex(tail), eps, tol, path)
    if frame == 0:
        # the map is the identity outside the unit disk
        area += math.pi * eps * eps - float(spatial.lens_area(abs(tail), eps, 1.0))
    return 2.0 * lrho + math.log(area) if area > 0 else -math.inf


@dataclass
class JacobianResult:
    """Per-disk ``log r`` and ``log(integral_D J / diam**(2t/t'))`` with band sups."""

    exponent: float
    log_r: np.ndarray
    log_ratio: np.ndarray
    band_edges: np.ndarray = field(default_factory=lambda: np.zeros(0))
    band_sup: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def sup(self) -> float:
        return float(np.exp(np.max(self.log_ratio)))

    def stability(self, bands: int = 3) -> float:
        return msr.band_stability(self.band_sup, bands)

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "sup": self.sup, "stability": self.stability(),
                "band_edges": self.band_edges.tolist(), "band_sup": self.band_sup.tolist()}


def _jacobian_shard(plan: ConstructionPlan, N: int, count: int, seed: int):
    rng = np.random.default_rng(seed)
    ln2 = math.log(2.0)
    n_on = 2 * count // 3 if N > 0 else 0
    log_r, log_a = [], []
    if n_on:
        b = sample_paths(plan, N, n_on, int(rng.integers(2 ** 63)))
        cum = _cumulative(plan.tab_log_g, b.groups)
        rel = rng.random(n_on) < 0.5
        kk = rng.integers(1, N + 1, n_on)
        lr = np.where(rel, cum[np.arange(n_on), kk] + ln2 * rng.uniform(-1.0, 3.0, n_on),
                      cum[:, N] * rng.random(n_on))
        lr = np.minimum(lr, -ln2)
        for i in range(n_on):
            g = b.groups[i]
            fr = min(int(np.searchsorted(-cum[i], -lr[i], side="right") - 1), N)
            while True:
                path = _path_offsets(plan, g, b.centers[i], fr, N)
                x = path[0][1] + path[0][2] if path else 0j
                # climb until the disk sits inside the frame's unit disk
                if fr == 0 or abs(x) + math.exp(lr[i] - cum[i, fr]) <= 1.0:
                    break
                fr -= 1
            log_a.append(log_image_area(plan, g, b.centers[i], fr, x, float(lr[i]), N, path=path))
            log_r.append(lr[i])
    n_off = count - n_on
    if n_off:
        z = np.sqrt(rng.random(n_off)) * np.exp(2j * np.pi * rng.random(n_off))
        lr = -ln2 * rng.uniform(1.0, 40.0, n_off)
        for zi, li in zip(z, lr):
            log_a.append(log_image_area(plan, [], [], 0, zi, float(li), N))
            log_r.append(li)
    return np.array(log_r), np.array(log_a)


def jacobian_integral_test(plan: ConstructionPlan, disks: int = 10 ** 4, depth: int | None = None,
                           seed: int = 0, workers: int = 1) -> JacobianResult:
    """``sup integral_D J(z, phi_N) dA / diam(D)**(2t/t')`` per 4-octave radius band.

    Disks are centered at sampled cells (radius near an ancestor's size, or
    log-uniform) or uniformly in the unit disk. Because each protecting disk
    is mapped onto itself, only disks crossing the boundary of ``D``
    contribute a correction to ``|D|``; their annulus part is integrated by
    quadrature and their core part recursively.
    """
    if disks < 1000:
        raise ValueError("need at least 1000 disks")
    N = plan.N_max if depth is None else depth
    parts = _run_shards(_jacobian_shard, (plan, N), disks, seed, workers)
    lr = np.concatenate([p[0] for p in parts])
    la = np.concatenate([p[1] for p in parts])
    e = 2.0 * plan.exponents.holder
    ratio = la - e * (lr + math.log(2.0))
    res = JacobianResult(e, lr, ratio)
    res.band_edges, res.band_sup = msr.band_sups(lr, ratio, BAND_WIDTH)
    return res


# --------------------------------------------------------------------------
# exponent identities


@dataclass
class IdentityReport:
    points: int
    max_residual: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def exponent_identity_suite(n_alpha: int = 100, n_K: int = 100, random: int = 10 ** 4,
                            seed: int = 0, tol: float = 1e-12) -> IdentityReport:
    """Check ``(t'-1) t/t' = alpha`` and ``t/t' = 1/K + (K-1) t/(2K)`` on a grid
    of ``(alpha, K)`` in ``(0.05, 0.95) x [1, 10]`` plus random draws."""
    rng = np.random.default_rng(seed)
    al = np.concatenate([np.repeat(np.linspace(0.05, 0.95, n_alpha), n_K),
                         rng.uniform(0.0, 1.0, random)])
    Ks = np.concatenate([np.tile(np.linspace(1.0, 10.0, n_K), n_alpha),
                         1.0 + 99.0 * rng.random(random)])
    worst = 0.0
    for a, K in zip(al, Ks):
        if not 0.0 < a < 1.0:
            continue
        t = exponents.critical_dimension(float(a), float(K))
        tp = exponents.stretched_dimension(t, float(K))
        h = exponents.holder_exponent(t, float(K))
        worst = max(worst, abs((tp - 1.0) * (t / tp) - a), abs(t / tp - h),
                    abs(t / tp - (1.0 / K + (K - 1.0) * t / (2.0 * K))))
    return IdentityReport(int(al.size), float(worst), bool(worst <= tol))


# --------------------------------------------------------------------------
# building blocks: stretches, radius law, mass sums, packings


def _wirtinger(f, z, h):
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def radial_block_check(K: float = 2.0, sigma: float = 0.1, r: float = 0.7, points: int = 10 ** 4,
                       seed: int = 0) -> dict:
    """Continuity, roundtrip, Jacobian and dilatation errors of one stretch."""
    rng = np.random.default_rng(seed)
    st = radial.RadialStretch(0.3 - 0.2j, r, sigma, K)
    c = st.center
    e = np.exp(2j * np.pi * rng.random(200))
    jump = 0.0
    for rad in (st.inner_radius, r):
        a = st.apply(c + rad * (1 - 1e-12) * e)
        b = st.apply(c + rad * (1 + 1e-12) * e)
        jump = max(jump, float(np.max(np.abs(a - b))) / rad)
    z = c + 1.5 * r * np.sqrt(rng.random(points)) * np.exp(2j * np.pi * rng.random(points))
    rt = float(np.max(np.abs(st.invert(st.apply(z)) - z) / np.maximum(np.abs(z - c), 1e-300)))
    # annulus points away from the interfaces
    lo, hi = math.log(st.inner_radius), math.log(r)
    rad = np.exp(lo + (hi - lo) * (0.05 + 0.9 * rng.random(1000)))
    za = c + rad * np.exp(2j * np.pi * rng.random(1000))
    h = 1e-6 * rad
    dz, dzb = _wirtinger(st.apply, za, h)
    jac_fd = np.abs(dz) ** 2 - np.abs(dzb) ** 2
    jac_err = float(np.max(np.abs(jac_fd / st.jacobian(za) - 1.0)))
    mu_fd = np.abs(dzb / dz)
    target = (K - 1.0) / (K + 1.0)
    mu_ann = float(np.max(np.abs(np.abs(st.beltrami(za)) - target)))
    mu_fd_err = float(np.max(np.abs(mu_fd - target)))
    off = np.concatenate([c + st.inner_radius * 0.9 * e, c + r * 1.1 * e])
    mu_off = float(np.max(np.abs(st.beltrami(off))))
    return {"continuity": jump, "roundtrip": rt, "jacobian_fd": jac_err,
            "beltrami_annulus": mu_ann, "beltrami_fd": mu_fd_err, "beltrami_outside": mu_off}


def radius_law_check(plan: ConstructionPlan, depth: int | None = None, circles: int = 20,
                     seed: int = 0) -> float:
    """Largest relative error of ``|phi(c + r e) - c| = r**(1/K) R**(1-1/K)`` for
    circles about generating disk centers at depths ``1..N``."""
    N = plan.N_max if depth is None else depth
    rng = np.random.default_rng(seed)
    b = sample_paths(plan, N, circles, int(rng.integers(2 ** 63)))
    e = np.exp(2j * np.pi * rng.random(64))
    worst = 0.0
    K = plan.K
    for k in range(N):
        for i in range(circles):
            j = b.groups[i, k]
            R = math.exp(plan.tab_log_R[k, j])
            a = math.exp(plan.tab_log_R[k, j] + K * plan.tab_log_sigma[k, j])
            r = math.exp(math.log(a) + (math.log(R) - math.log(a)) * rng.uniform(0.01, 0.99))
            img = qcmap.evaluate_about(plan, k, int(j), r * e, N)
            want = r ** (1.0 / K) * R ** (1.0 - 1.0 / K)
            worst = max(worst, float(np.max(np.abs(np.abs(img) / want - 1.0))))
    return worst


def mass_sum_check(plan: ConstructionPlan) -> dict:
    """Log-space gaps between the source/target Hausdorff sums and the coverage product."""
    ex = plan.exponents
    out = {"source": 0.0, "target": 0.0, "product": []}
    for N in range(1, plan.N_max + 1):
        want = float(np.sum(np.log(plan.coverage[:N])))
        out["source"] = max(out["source"], abs(tree.hausdorff_log_sum(plan, N, ex.t, "source") - want))
        out["target"] = max(out["target"], abs(tree.hausdorff_log_sum(plan, N, ex.t_prime, "target") - want))
        out["product"].append(math.exp(want))
    return out


def packing_check(plan: ConstructionPlan) -> list[dict]:
    """Coverage, radius cap, disjointness and the best single equal-radius pass."""
    rows = []
    for n, gen in enumerate(plan.generations, start=1):
        eps = packing.epsilon_schedule(n, plan.eps1)
        radii = [g.R for g in gen.groups]
        single = 0.0
        if isinstance(gen, packing.LatticePacking):
            area = gen.pattern.area
            single = max(float(area[q] - (area[q - 1] if q else 0.0)) for q in range(gen.P + 1))
        rows.append({"generation": n, "coverage": gen.coverage, "target": 1.0 - eps,
                     "max_radius": max(radii),
                     "radius_cap": tree.radius_cap(n, plan.exponents.t, plan.K, plan.sigma_max),
                     "disjoint": bool(packing.validate_disjoint(gen)), "single_pass": single})
    return rows


# --------------------------------------------------------------------------
# the full property suite


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    relation: str          # "<=" or ">="
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        return self.value <= self.threshold if self.relation == "<=" else self.value >= self.threshold

    def to_dict(self) -> dict:
        # timings are left out so reports are reproducible
        d = {k: v for k, v in asdict(self).items() if k != "seconds"}
        d["passed"] = self.passed
        return d


def verify_suite(plan: ConstructionPlan, depth: int | None = None, seed: int = 0,
                 scale: float = 1.0, workers: int = 1) -> list[Check]:
    """Every property check for one plan; ``scale`` shrinks the sample counts."""
    import time

    N = min(plan.N_max if depth is None else depth, plan.N_max)
    ex = plan.exponents
    out: list[Check] = []

    def timed(fn):
        t0 = time.perf_counter()
        v = fn()
        return v, time.perf_counter() - t0

    def n(x):
        return max(1000, int(x * scale))

    rep, dt = timed(lambda: exponent_identity_suite(seed=seed))
    out.append(Check("exponent identities", rep.max_residual, 1e-12, "<=", dt))
    ms, dt = timed(lambda: mass_sum_check(plan))
    out.append(Check("mass sums (log gap)", max(ms["source"], ms["target"]), 1e-9, "<=", dt))
    out.append(Check("coverage product", min(ms["product"]), 0.9, ">="))
    rb, dt = timed(lambda: radial_block_check(K=plan.K, seed=seed))
    out.append(Check("stretch continuity / r", rb["continuity"], 1e-8, "<=", dt))
    out.append(Check("stretch roundtrip", rb["roundtrip"], 1e-12, "<="))
    out.append(Check("stretch Jacobian vs differences", rb["jacobian_fd"], 1e-5, "<="))
    out.append(Check("dilatation in annulus", max(rb["beltrami_annulus"], rb["beltrami_fd"]), 1e-6, "<="))
    out.append(Check("dilatation outside annulus", rb["beltrami_outside"], 0.0, "<="))
    if N > 0:
        rl, dt = timed(lambda: radius_law_check(plan, N, seed=seed))
        out.append(Check("disk image radius law", rl, 1e-9, "<=", dt))
        hr, dt = timed(lambda: empirical_holder(plan, "boundary-straddling", n(1e5), seed, N,
                                                workers=workers))
        out.append(Check("map Hoelder envelope slope", hr.fit.slope, ex.holder - 0.05, ">=", dt))
        out.append(Check("map extremal pair slope", hr.extremal.slope, ex.holder + 0.1, "<="))
        jr, dt = timed(lambda: jacobian_integral_test(plan, n(1e4), N, seed, workers))
        out.append(Check("Jacobian integral band ratio", jr.stability(), 2.0, "<=", dt))
        for side, target in (("source", ex.t), ("target", ex.t_prime)):
            fit, dt = timed(lambda: box_dimension(plan, side, N, samples=n(1e6), seed=seed))
            out.append(Check(f"{side} box dimension error", abs(fit.slope - target), 0.15, "<=", dt))
        mu = msr.CantorMeasure(plan, "target")
        gr, dt = timed(lambda: msr.growth_ratio(mu, ex.t_prime, n(1e4), seed, N))
        out.append(Check("measure growth band ratio", gr.stability(), 2.0, "<=", dt))
        hol, dt = timed(lambda: holomorphy_residual(plan, 200, seed, N))
        out.append(Check("transform holomorphy residual", hol, 1e-6, "<=", dt))
        nc, dt = timed(lambda: witness_nonconstant(plan, N, seed))
        out.append(Check("witness spread", nc, 1e-6, ">=", dt))
        if not math.isnan(ex.alpha):
            wh, dt = timed(lambda: witness_holder(plan, n(1e4), seed, N, workers))
            out.append(Check("witness Hoelder slope", wh.fit.slope, ex.alpha - 0.07, ">=", dt))
    pk, dt = timed(lambda: packing_check(plan))
    out.append(Check("packing coverage margin", min(r["coverage"] - r["target"] for r in pk), 0.0, ">=", dt))
    out.append(Check("packing radius margin", min(r["radius_cap"] - r["max_radius"] for r in pk), 0.0, ">="))
    out.append(Check("packing disjoint", float(all(r["disjoint"] for r in pk)), 1.0, ">="))
    out.append(Check("single equal-radius pass", max(r["single_pass"] for r in pk), 0.91, "<="))
    return out


# --------------------------------------------------------------------------
# output


def write_scaling_csv(scales, statistics, fh: io.TextIOBase, names=("log_scale", "statistic")) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(names)
    for s, v in zip(scales, statistics):
        w.writerow([repr(float(s)), repr(float(v))])


def write_summary_json(summary: dict, fh: io.TextIOBase) -> None:
    json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
    fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")
