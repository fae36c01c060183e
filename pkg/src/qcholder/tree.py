"""The nested tree of generating disks, built lazily from per-generation packings.

A cell of depth ``k`` is reached by choosing one disk of each generation
``1..k``. Every parent re-uses the same normalized packing, so a cell is
fully described by its path of (group, disk) choices; centers are kept in
parent-relative coordinates and absolute positions are only reconstructed
on request.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

from .exponents import SIGMA_MAX, ExponentSet, max_R_for_sigma_bound
from .packing import (ExplicitPacking, GenerationPacking, LatticePacking, epsilon_schedule,
                      pack_unit_disk, packing_from_dict)

PLAN_FORMAT = "qcholder-plan"
PLAN_VERSION = 1

OUTSIDE, ANNULUS, EXHAUSTED = 0, 1, 2
CLASS_NAMES = {OUTSIDE: "outside-all", ANNULUS: "annulus", EXHAUSTED: "core"}


class ConstructionPlan:
    """Exponents plus one packing per generation; immutable after construction."""

    def __init__(self, exponents: ExponentSet, generations: Sequence[GenerationPacking],
                 seed: int = 0, eps1: float = 0.05, sigma_max: float = SIGMA_MAX):
        self.exponents = exponents
        self.generations = list(generations)
        self.seed = seed
        self.eps1 = eps1
        self.sigma_max = sigma_max
        K = exponents.K
        self.log_R, self.log_sigma, self.log_share, self.log_m, self.coverage = [], [], [], [], []
        for g in self.generations:
            lr, ls = g.group_arrays()
            c = g.coverage
            self.log_R.append(lr)
            self.log_sigma.append(ls)
            self.log_share.append(2.0 * lr - math.log(c))
            self.log_m.append(np.array([math.log(x.m) for x in g.groups]))
            self.coverage.append(c)
        J = max((len(g.groups) for g in self.generations), default=1)
        n = len(self.generations)
        # padded tables indexed [generation - 1, group]
        self.tab_log_R = np.full((n, J), np.nan)
        self.tab_log_sigma = np.full((n, J), np.nan)
        for k in range(n):
            self.tab_log_R[k, :self.log_R[k].size] = self.log_R[k]
            self.tab_log_sigma[k, :self.log_sigma[k].size] = self.log_sigma[k]
        self.tab_log_g = K * self.tab_log_sigma + self.tab_log_R        # source child scale
        self.tab_log_rho = self.tab_log_sigma + self.tab_log_R          # target child scale
        self.tab_log_share = 2.0 * self.tab_log_R - np.log(np.array(self.coverage))[:, None]

    @property
    def N_max(self) -> int:
        return len(self.generations)

    @property
    def K(self) -> float:
        return self.exponents.K

    def truncated(self, N: int) -> "ConstructionPlan":
        if not 0 <= N <= self.N_max:
            raise ValueError(f"depth {N} outside 0..{self.N_max}")
        return ConstructionPlan(self.exponents, self.generations[:N], self.seed, self.eps1,
                                self.sigma_max)

    def check(self, tol: float = 1e-12) -> None:
        """Coverage, radius caps and the sigma rule for every generation."""
        ex = self.exponents
        for n, g in enumerate(self.generations, start=1):
            if not math.isnan(g.epsilon) and g.coverage < 1.0 - g.epsilon:
                raise ValueError(f"generation {n}: coverage {g.coverage} < 1 - {g.epsilon}")
            for grp in g.groups:
                lhs = ex.t * ex.K * grp.log_sigma
                rhs = (2.0 - ex.t) * grp.log_R
                if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
                    raise ValueError(f"generation {n}: sigma rule violated")
                if grp.sigma >= self.sigma_max:
                    raise ValueError(f"generation {n}: sigma {grp.sigma} >= {self.sigma_max}")

    # -- serialization
    def to_dict(self) -> dict:
        return {"format": PLAN_FORMAT, "version": PLAN_VERSION,
                "exponents": {k: repr(v) for k, v in self.exponents.to_dict().items()},
                "seed": self.seed, "eps1": repr(self.eps1), "sigma_max": repr(self.sigma_max),
                "generations": [g.to_dict() for g in self.generations]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructionPlan":
        if d.get("format") != PLAN_FORMAT:
            raise ValueError("not a plan document")
        if int(d.get("version", -1)) != PLAN_VERSION:
            raise ValueError(f"unsupported plan version {d.get('version')!r}")
        e = {k: float(v) for k, v in d["exponents"].items()}
        ex = ExponentSet(K=e["K"], alpha=e["alpha"], t=e["t"], t_prime=e["t_prime"], holder=e["holder"])
        gens = [packing_from_dict(g) for g in d["generations"]]
        return cls(ex, gens, int(d["seed"]), float(d["eps1"]), float(d["sigma_max"]))

    @classmethod
    def loads(cls, text: str) -> "ConstructionPlan":
        return cls.from_dict(json.loads(text))


def radius_cap(N: int, t: float, K: float, sigma_max: float = SIGMA_MAX) -> float:
    """Default per-generation cap ``min(R_max, 2**(-N-3))``."""
    return min(max_R_for_sigma_bound(t, K, sigma_max), 2.0 ** (-N - 3))


@functools.lru_cache(maxsize=64)
def _generation(t: float, K: float, N: int, seed: int, eps1: float, sigma_max: float,
                max_passes: int) -> LatticePacking:
    return pack_unit_disk(epsilon_schedule(N, eps1), radius_cap(N, t, K, sigma_max), t, K,
                          seed=seed, max_passes=max_passes, sigma_max=sigma_max)


def build_plan(alpha: float, K: float, N_max: int = 4, seed: int = 0, eps1: float = 0.05,
               sigma_max: float = SIGMA_MAX, max_passes: int = 20) -> ConstructionPlan:
    """Pack every generation ``1..N_max`` (one mesh offset per seed)."""
    ex = ExponentSet.from_alpha(alpha, K)
    return build_plan_from_t(ex, N_max, seed, eps1, sigma_max, max_passes)


def build_plan_from_t(ex: ExponentSet, N_max: int, seed: int = 0, eps1: float = 0.05,
                      sigma_max: float = SIGMA_MAX, max_passes: int = 20) -> ConstructionPlan:
    if N_max < 0:
        raise ValueError("N_max must be >= 0")
    gens = [_generation(ex.t, ex.K, n, seed, eps1, sigma_max, max_passes)
            for n in range(1, N_max + 1)]
    return ConstructionPlan(ex, gens, seed, eps1, sigma_max)


def single_disk_plan(K: float, R: float = 0.5, t: float = 0.5, depth: int = 1) -> ConstructionPlan:
    """Degenerate plan: each generation is one centered disk (tests, examples)."""
    ex = ExponentSet.from_t(t, K)
    gens = [ExplicitPacking([R], [[0j]], t, K, sigma_max=1.0) for _ in range(depth)]
    return ConstructionPlan(ex, gens, 0, float("nan"), 1.0)


# --------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class CellIndex:
    """Path of ``(group j, disk key i)`` pairs, one per generation.

    Groups are 0-based; disk keys are the packing's opaque identifiers.
    """

    path: tuple = ()

    @property
    def depth(self) -> int:
        return len(self.path)

    def child(self, j: int, key) -> "CellIndex":
        return CellIndex(self.path + ((int(j), tuple(key)),))

    def __str__(self) -> str:
        if not self.path:
            return "root"
        return "/".join(f"{j}:" + ".".join(str(a) for a in key) for j, key in self.path)


@dataclass(frozen=True)
class Cell:
    index: CellIndex
    source_center: complex
    log_source_radius: float
    target_center: complex
    log_target_radius: float
    log_protect_radius: float
    local_centers: tuple = field(default=(), repr=False)
    groups: tuple = field(default=(), repr=False)

    @property
    def depth(self) -> int:
        return self.index.depth


def root_cell() -> Cell:
    return Cell(CellIndex(), 0j, 0.0, 0j, 0.0, 0.0)


def child_cell(plan: ConstructionPlan, cell: Cell, j: int, center: complex, key) -> Cell:
    n = cell.depth
    if n >= plan.N_max:
        raise ValueError("depth exhausted")
    lr = plan.log_R[n][j]
    ls = plan.log_sigma[n][j]
    K = plan.K
    s = cell.source_center + math.exp(cell.log_source_radius) * center
    w = cell.target_center + math.exp(cell.log_target_radius) * center
    ls_src = cell.log_source_radius + K * ls + lr
    return Cell(cell.index.child(j, key), s, ls_src, w, cell.log_target_radius + ls + lr,
                ls_src - K * ls, cell.local_centers + (complex(center),), cell.groups + (int(j),))


def children(plan: ConstructionPlan, cell: Cell) -> Iterator[Cell]:
    """Lazily enumerate the children of ``cell``."""
    if cell.depth >= plan.N_max:
        raise ValueError("depth exhausted")
    gen = plan.generations[cell.depth]
    for j, c, key in gen.iter_disks():
        yield child_cell(plan, cell, j, c, gen.key_tuple(key) if not isinstance(key, tuple) else key)


def cell_from_index(plan: ConstructionPlan, index: CellIndex) -> Cell:
    cell = root_cell()
    for n, (j, key) in enumerate(index.path):
        jj, c = plan.generations[n].disk_from_key(tuple(key))
        if jj != j:
            raise ValueError(f"level {n + 1}: key belongs to group {jj}, not {j}")
        cell = child_cell(plan, cell, j, c, key)
    return cell


def hausdorff_log_sum(plan: ConstructionPlan, N: int, exponent: float, side: str = "source") -> float:
    """``log`` of the sum over depth-``N`` cells of ``radius**exponent``."""
    if exponent <= 0:
        raise ValueError("exponent must be positive")
    if not 0 <= N <= plan.N_max:
        raise ValueError(f"depth {N} outside 0..{plan.N_max}")
    tab = {"source": plan.tab_log_g, "target": plan.tab_log_rho}[side]
    total = 0.0
    for n in range(N):
        J = plan.log_R[n].size
        total += float(logsumexp(plan.log_m[n] + exponent * tab[n, :J]))
    return total


def hausdorff_sum(plan: ConstructionPlan, N: int, exponent: float, side: str = "source") -> float:
    return math.exp(hausdorff_log_sum(plan, N, exponent, side))


# --------------------------------------------------------------------------
# batches of paths


@dataclass
class PathBatch:
    """``n`` root-to-depth paths: groups and local centers per level."""

    plan: ConstructionPlan
    groups: np.ndarray        # (n, depth) int
    centers: np.ndarray       # (n, depth) complex, local to the parent frame
    keys: list = field(default_factory=list, repr=False)

    @property
    def depth(self) -> int:
        return self.groups.shape[1]

    def __len__(self) -> int:
        return self.groups.shape[0]

    def _tab_sum(self, tab: np.ndarray, upto: int | None = None) -> np.ndarray:
        k = self.depth if upto is None else upto
        if k == 0:
            return np.zeros(len(self))
        lv = np.arange(k)
        return tab[lv[None, :], self.groups[:, :k]].sum(axis=1)

    def log_source_radius(self, upto=None) -> np.ndarray:
        return self._tab_sum(self.plan.tab_log_g, upto)

    def log_target_radius(self, upto=None) -> np.ndarray:
        return self._tab_sum(self.plan.tab_log_rho, upto)

    def log_mass(self, upto=None) -> np.ndarray:
        return self._tab_sum(self.plan.tab_log_share, upto)

    def log_protect_radius(self) -> np.ndarray:
        if self.depth == 0:
            return np.zeros(len(self))
        last = self.plan.tab_log_sigma[self.depth - 1, self.groups[:, -1]]
        return self.log_source_radius() - self.plan.K * last

    def _absolute(self, tab: np.ndarray) -> np.ndarray:
        # accumulate from the deepest frame outward
        out = np.zeros(len(self), dtype=complex)
        for k in range(self.depth - 1, -1, -1):
            scale = np.exp(tab[k, self.groups[:, k]])
            out = self.centers[:, k] + scale * out
        return out

    def source_center(self) -> np.ndarray:
        return self._absolute(self.plan.tab_log_g)

    def target_center(self) -> np.ndarray:
        return self._absolute(self.plan.tab_log_rho)

    def index(self, i: int) -> CellIndex:
        path = tuple((int(self.groups[i, k]),
                      self.plan.generations[k].key_tuple(self.keys[k][i]))
                     for k in range(self.depth))
        return CellIndex(path)

    def cells(self) -> list[Cell]:
        out = []
        for i in range(len(self)):
            cell = root_cell()
            for k in range(self.depth):
                key = self.plan.generations[k].key_tuple(self.keys[k][i]) if self.keys else ()
                cell = child_cell(self.plan, cell, int(self.groups[i, k]), complex(self.centers[i, k]), key)
            out.append(cell)
        return out


def sample_paths(plan: ConstructionPlan, N: int, count: int, seed: int) -> PathBatch:
    """Mass-proportional paths: each child drawn with probability ``R**2 / c``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0 <= N <= plan.N_max:
        raise ValueError(f"depth {N} outside 0..{plan.N_max}")
    rng = np.random.default_rng(seed)
    groups = np.zeros((count, N), dtype=np.int64)
    centers = np.zeros((count, N), dtype=complex)
    keys = []
    for k in range(N):
        g, c, key = plan.generations[k].sample(rng, count)
        groups[:, k] = g
        centers[:, k] = c
        keys.append(key)
    return PathBatch(plan, groups, centers, keys)


def sample_cells(plan: ConstructionPlan, N: int, count: int, seed: int) -> list[Cell]:
    return sample_paths(plan, N, count, seed).cells()


# --------------------------------------------------------------------------
# point location


@dataclass
class Walk:
    """Result of walking points down the frames (all arrays of length n)."""

    depth: np.ndarray          # frames descended
    status: np.ndarray         # OUTSIDE / ANNULUS / EXHAUSTED
    groups: np.ndarray         # (n, N) groups of descended levels, -1 padded
    centers: np.ndarray        # (n, N) local centers of descended levels
    u: np.ndarray              # local coordinate in the deepest frame
    ann_center: np.ndarray     # child center when status == ANNULUS
    ann_group: np.ndarray
    keys: list


def walk(plan: ConstructionPlan, u, N: int | None = None, with_keys: bool = False,
         start: int = 0, side: str = "source") -> Walk:
    """Descend points through generating disks, from the frame at depth ``start``.

    On the target side the generating disks have local radius ``sigma R``
    instead of ``sigma**K R``. Points on an inner interface circle count as
    annulus points.
    """
    N = plan.N_max if N is None else N
    if not 0 <= start <= N <= plan.N_max:
        raise ValueError(f"depth range {start}..{N} outside 0..{plan.N_max}")
    if side == "source":
        inner, scale = plan.K * plan.tab_log_sigma, plan.tab_log_g
    elif side == "target":
        inner, scale = plan.tab_log_sigma, plan.tab_log_rho
    else:
        raise ValueError(f"unknown side {side!r}")
    u = np.array(u, dtype=complex).ravel()
    n = u.size
    depth = np.zeros(n, dtype=np.int64)
    status = np.full(n, OUTSIDE, dtype=np.int8)
    groups = np.full((n, N - start), -1, dtype=np.int64)
    centers = np.zeros((n, N - start), dtype=complex)
    ann_c = np.zeros(n, dtype=complex)
    ann_g = np.full(n, -1, dtype=np.int64)
    keys = []
    active = np.abs(u) < 1.0
    for k in range(start, N):
        idx = np.nonzero(active)[0]
        gen = plan.generations[k]
        loc = gen.locate(u[idx])
        if with_keys:
            kk = np.zeros(n, dtype=loc.key.dtype)
            kk[idx] = loc.key
            keys.append(kk)
        if idx.size == 0:
            continue
        active[idx[~loc.found]] = False
        hit = idx[loc.found]
        j = loc.group[loc.found]
        c = loc.center[loc.found]
        y = u[hit] - c
        with np.errstate(divide="ignore"):
            L = np.log(np.abs(y)) - plan.tab_log_R[k, j]
        core = L < inner[k, j]
        d = hit[core]
        groups[d, k - start] = j[core]
        centers[d, k - start] = c[core]
        u[d] = y[core] / np.exp(scale[k, j[core]])
        depth[d] += 1
        a = hit[~core]
        status[a] = ANNULUS
        ann_c[a] = c[~core]
        ann_g[a] = j[~core]
        active[a] = False
    status[active & (depth > 0)] = EXHAUSTED
    return Walk(depth, status, groups, centers, u, ann_c, ann_g, keys)


def locate(plan: ConstructionPlan, z: complex, depth: int | None = None) -> tuple[Cell, str]:
    """Deepest cell whose generating disk contains ``z`` and how ``z`` sits in it."""
    N = plan.N_max if depth is None else depth
    w = walk(plan, [z], N, with_keys=True)
    cell = root_cell()
    d = int(w.depth[0])
    for k in range(d):
        key = plan.generations[k].key_tuple(w.keys[k][0])
        cell = child_cell(plan, cell, int(w.groups[0, k]), complex(w.centers[0, k]), key)
    st = int(w.status[0])
    if st == ANNULUS:
        key = plan.generations[d].key_tuple(w.keys[d][0])
        cell = child_cell(plan, cell, int(w.ann_group[0]), complex(w.ann_center[0]), key)
    return cell, CLASS_NAMES[st]


# --------------------------------------------------------------------------
# cell dumps


CELL_COLUMNS = ["depth", "path", "source_x", "source_y", "log_source_radius",
                "target_x", "target_y", "log_target_radius", "log_protect_radius"]


def write_cells_csv(cells: Sequence[Cell], fh: io.TextIOBase) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CELL_COLUMNS)
    for c in cells:
        vals = (c.source_center.real, c.source_center.imag, c.log_source_radius, c.target_center.real,
                c.target_center.imag, c.log_target_radius, c.log_protect_radius)
        w.writerow([c.depth, str(c.index)] + [repr(float(v)) for v in vals])
