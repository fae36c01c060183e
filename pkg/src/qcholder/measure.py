"""The natural product measure on the tree, its growth, and its Cauchy transform.

Every child of a frame receives the share ``R**2 / c`` of its parent's mass
(``c`` = the generation's coverage), so a depth-``N`` cell weighs
``prod_k R_k**2 / c_k`` on both the source and the target side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qcmap, spatial, transform
from .tree import CellIndex, ConstructionPlan, sample_paths


@dataclass(frozen=True)
class CantorMeasure:
    plan: ConstructionPlan
    side: str = "target"

    def __post_init__(self):
        if self.side not in ("source", "target"):
            raise ValueError(f"unknown side {self.side!r}")

    def weights(self, n: int) -> np.ndarray:
        """Group weights ``m_j R_j**2 / c`` of generation ``n`` (sum to 1)."""
        g = self.plan.generations[n - 1]
        R = np.array([x.R for x in g.groups])
        m = np.array([float(x.m) for x in g.groups])
        return m * R * R / g.coverage

    @property
    def scale_table(self) -> np.ndarray:
        """Log child radius relative to the parent frame, per (generation, group)."""
        return self.plan.tab_log_rho if self.side == "target" else self.plan.tab_log_g

    @property
    def exponent(self) -> float:
        ex = self.plan.exponents
        return ex.t_prime if self.side == "target" else ex.t


def cell_log_mass(measure: CantorMeasure, index: CellIndex) -> float:
    plan = measure.plan
    if index.depth > plan.N_max:
        raise ValueError("index deeper than the plan")
    return float(sum(plan.tab_log_share[k, j] for k, (j, _) in enumerate(index.path)))


def cell_mass(measure: CantorMeasure, index: CellIndex) -> float:
    return math.exp(cell_log_mass(measure, index))


# --------------------------------------------------------------------------
# disk masses


def _frame_mass(measure: CantorMeasure, k: int, N: int, x: complex, eps: float, path) -> float:
    """Normalized mass of ``D(x, eps)`` for the frame at depth ``k``.

    ``path`` lists ``(group, center)`` of the children leading towards the
    query point (possibly empty). Neighbouring children count fully when
    their center lies in the disk; the child holding the point is refined.
    """
    if abs(x) + 1.0 <= eps:
        return 1.0
    if abs(x) - eps >= 1.0:
        return 0.0
    plan = measure.plan
    gen = plan.generations[k]
    cov = gen.coverage
    if path:
        j, c = path[0]
        R = math.exp(plan.tab_log_R[k, j])
    else:
        loc = gen.locate(np.array([x]))
        if loc.found[0]:
            j, c, R = int(loc.group[0]), complex(loc.center[0]), float(loc.R[0])
        else:
            j = -1
    total = 0.0
    if j < 0 or abs(x - c) + eps > R:
        total = spatial.area_in_disk(gen, x, eps) / (math.pi * cov)
    if j < 0:
        return min(max(total, 0.0), 1.0)
    m = R * R / cov
    s = math.exp(measure.scale_table[k, j])
    d = abs(x - c)
    if j >= 0 and total > 0.0 and d <= eps:
        total = max(total - m, 0.0)
    if d + s <= eps:
        total += m
    elif d - s < eps:
        if k + 1 >= N:
            total += m * float(spatial.lens_area(d, eps, s)) / (math.pi * s * s)
        else:
            total += m * _frame_mass(measure, k + 1, N, (x - c) / s, eps / s, path[1:])
    return min(max(total, 0.0), 1.0)


def disk_mass(measure: CantorMeasure, z: complex, r: float, depth: int | None = None) -> float:
    """``mu(D(z, r))`` for an absolute center ``z``."""
    N = measure.plan.N_max if depth is None else depth
    if r <= 0:
        return 0.0
    if N == 0:
        return float(spatial.lens_area(abs(z), r, 1.0)) / math.pi
    return _frame_mass(measure, 0, N, complex(z), float(r), [])


def path_disk_log_mass(measure: CantorMeasure, groups, centers, frame: int, tail: complex,
                       log_r: float, depth: int) -> float:
    """``log mu(D)`` for a disk given in path form.

    The disk has center ``tail`` in the frame at depth ``frame`` (reached via
    ``groups``/``centers``) and absolute log radius ``log_r``.
    """
    plan = measure.plan
    tab = measure.scale_table
    log_scale = sum(tab[k, groups[k]] for k in range(frame))
    log_prefix = sum(plan.tab_log_share[k, groups[k]] for k in range(frame))
    eps = math.exp(log_r - log_scale)
    path = [(int(groups[k]), complex(centers[k])) for k in range(frame, len(groups)) if groups[k] >= 0]
    if frame >= depth:
        m = float(spatial.lens_area(abs(tail), eps, 1.0)) / math.pi
    else:
        m = _frame_mass(measure, frame, depth, complex(tail), eps, path)
    return math.log(m) + log_prefix if m > 0 else -math.inf


# --------------------------------------------------------------------------
# growth


@dataclass
class GrowthResult:
    """Per-sample ``log r`` and ``log mu(D)/r**s``; dyadic band sups."""

    exponent: float
    log_r: np.ndarray
    log_ratio: np.ndarray
    on_set: np.ndarray
    band_edges: np.ndarray = field(default_factory=lambda: np.zeros(0))
    band_sup: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def sup(self) -> float:
        return float(np.exp(np.max(self.log_ratio)))

    def stability(self, bands: int = 3) -> float:
        """Largest ratio between sups of adjacent bands among the ``bands`` finest."""
        return band_stability(self.band_sup, bands)


def band_stability(band_sup: np.ndarray, bands: int = 3) -> float:
    """``exp`` of the largest jump between adjacent log band sups (finest first)."""
    s = np.asarray(band_sup)[:bands]
    if s.size < 2:
        return math.inf
    return float(np.exp(np.max(np.abs(np.diff(s)))))


def band_sups(log_r: np.ndarray, log_stat: np.ndarray, width: float = 4.0 * math.log(2.0),
              min_count: int = 20):
    """Sup of ``log_stat`` per band of ``log r``, finest first.

    Bands are ``[width * i, width * (i + 1))``; bands with fewer than
    ``min_count`` samples are dropped.
    """
    log_r = np.asarray(log_r, dtype=float)
    log_stat = np.asarray(log_stat, dtype=float)
    ok = np.isfinite(log_r) & np.isfinite(log_stat)
    idx = np.floor(log_r[ok] / width).astype(np.int64)
    if idx.size == 0:
        return np.zeros(0), np.zeros(0)
    u, inv, cnt = np.unique(idx, return_inverse=True, return_counts=True)
    sup = np.full(u.size, -np.inf)
    np.maximum.at(sup, inv, log_stat[ok])
    keep = cnt >= min_count
    return u[keep] * width, sup[keep]


def growth_ratio(measure: CantorMeasure, exponent: float, samples: int, seed: int,
                 depth: int | None = None) -> GrowthResult:
    """Sample ``mu(D(z, r)) / r**exponent`` over on-set and off-set centers.

    A third of the disks are centered at depth-``depth`` cells with radius
    within a factor ``2**[-1, 3]`` of an ancestor cell's radius (where the
    sup is attained), a third at cell centers with log-uniform radii, and a
    third uniform in the unit disk with radii ``2**-j``, ``j <= 40``.
    """
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    plan = measure.plan
    N = plan.N_max if depth is None else depth
    rng = np.random.default_rng(seed)
    n_on = 2 * samples // 3 if N > 0 else 0
    n_off = samples - n_on
    log_r, log_m, on = [], [], []
    if n_on:
        b = sample_paths(plan, N, n_on, int(rng.integers(2 ** 31)))
        tab = measure.scale_table
        lv = np.arange(N)
        cum = np.concatenate([np.zeros((n_on, 1)), np.cumsum(tab[lv[None, :], b.groups], axis=1)], axis=1)
        rel = rng.random(n_on) < 0.5
        kk = rng.integers(1, N + 1, n_on)
        lr = np.where(rel, cum[np.arange(n_on), kk] + math.log(2.0) * rng.uniform(-1.0, 3.0, n_on),
                      cum[:, N] * rng.random(n_on))
        lr = np.minimum(lr, 0.0)
        for i in range(n_on):
            g = b.groups[i]
            # deepest frame whose scale still exceeds r
            fr = min(int(np.searchsorted(-cum[i], -lr[i], side="right") - 1), N)
            x = 0j
            for k in range(N - 1, fr - 1, -1):
                x = b.centers[i, k] + math.exp(tab[k, g[k]]) * x
            log_m.append(path_disk_log_mass(measure, g, b.centers[i], fr, x, float(lr[i]), N))
            log_r.append(lr[i])
            on.append(True)
    if n_off:
        z = np.sqrt(rng.random(n_off)) * np.exp(2j * np.pi * rng.random(n_off))
        r = 2.0 ** -rng.uniform(1.0, 40.0, n_off)
        for zi, ri in zip(z, r):
            m = disk_mass(measure, zi, ri, N)
            log_r.append(math.log(ri))
            log_m.append(math.log(m) if m > 0 else -math.inf)
            on.append(False)
    log_r = np.array(log_r)
    ratio = np.array(log_m) - exponent * log_r
    res = GrowthResult(exponent, log_r, ratio, np.array(on))
    res.band_edges, res.band_sup = band_sups(log_r, ratio)
    return res


# --------------------------------------------------------------------------
# Cauchy transform and the witness


@dataclass
class TransformValue:
    value: np.ndarray
    error: np.ndarray


def _require_target(measure: CantorMeasure) -> None:
    if measure.side != "target":
        raise ValueError("the Cauchy transform is taken of the target-side measure")


def cauchy_transform(measure: CantorMeasure, w, depth: int | None = None,
                     near_factor: float = 8.0, cap: str = "atom") -> TransformValue:
    """``C mu(w) = (1/pi) integral dmu(y) / (w - y)`` with an error bound.

    Cells at the depth cap are atoms; a query exactly on an atom gives an
    infinite value and error.
    """
    _require_target(measure)
    N = measure.plan.N_max if depth is None else depth
    shape = np.shape(w)
    eng = transform.CauchyEngine(measure.plan, N, near_factor, cap)
    val, _, err = eng.evaluate(transform.point_queries(np.ravel(w)))
    return TransformValue((val / math.pi).reshape(shape), (err / math.pi).reshape(shape))


def cauchy_pair(measure: CantorMeasure, groups, centers, depth_path, tail, dtail,
                depth: int | None = None, near_factor: float = 8.0, cap: str = "disk"):
    """``C mu(v + d) - C mu(v)`` with ``v`` and ``d`` given in path form.

    Returns ``(value at v, difference, error bound on the value)``.
    """
    _require_target(measure)
    N = measure.plan.N_max if depth is None else depth
    eng = transform.CauchyEngine(measure.plan, N, near_factor, cap)
    q = transform.path_queries(groups, centers, depth_path, tail, dtail)
    val, dif, err = eng.evaluate(q)
    return val / math.pi, dif / math.pi, err / math.pi


def witness(plan: ConstructionPlan, measure: CantorMeasure, z, depth: int | None = None,
            near_factor: float = 8.0) -> TransformValue:
    """``f(z) = C mu(phi(z))``; deep images stay in path form, children at the
    cap are uniform disks so ``f`` is continuous."""
    _require_target(measure)
    N = plan.N_max if depth is None else depth
    shape = np.shape(z)
    ip = qcmap.image_path(plan, np.ravel(z), 0, N)
    val, _, err = cauchy_pair(measure, ip.groups, ip.centers, ip.depth, ip.tail, 0.0, N,
                              near_factor, "disk")
    return TransformValue(val.reshape(shape), err.reshape(shape))


def witness_pair(plan: ConstructionPlan, measure: CantorMeasure, z, d, depth: int | None = None,
                 near_factor: float = 8.0):
    """``log |f(z + d) - f(z)|`` without cancellation, for arrays ``z, d``."""
    _require_target(measure)
    N = plan.N_max if depth is None else depth
    pe = qcmap.evaluate_pair(plan, z, d, 0, N)
    n = pe.diff.size
    width = max(N, 1)
    groups = np.full((n, width), -1, dtype=np.int64)
    centers = np.zeros((n, width), dtype=complex)
    depth_path = np.zeros(n, dtype=np.int64)
    tail = np.zeros(n, dtype=complex)
    dtail = np.zeros(n, dtype=complex)
    for cd in np.unique(pe.common_depth):
        sel = np.nonzero(pe.common_depth == cd)[0]
        ip = qcmap.image_path(plan, pe.local[sel], int(cd), N)
        groups[sel, :cd] = pe.groups[sel, :cd]
        centers[sel, :cd] = pe.centers[sel, :cd]
        groups[sel, cd:N] = ip.groups
        centers[sel, cd:N] = ip.centers
        depth_path[sel] = cd + ip.depth
        # the image offset lives in frame cd; move it to the tail frame
        dd = pe.diff[sel].copy()
        for k in range(N - int(cd)):
            s = ip.depth > k
            dd[s] = dd[s] / np.exp(plan.tab_log_rho[cd + k, ip.groups[s, k]])
        dtail[sel] = dd
        tail[sel] = ip.tail
    _, dif, _ = cauchy_pair(measure, groups, centers, depth_path, tail, dtail, N, near_factor, "disk")
    with np.errstate(divide="ignore"):
        return np.log(np.abs(dif))
