"""Evaluation of the composed maps ``phi_N``, their inverses and Jacobians.

Points are pushed down the source frames (one generation per level) until
they leave every protecting disk, land in an annulus, or run out of
generations. The image is then rebuilt from the deepest target frame
outward, so only one rounding per level is incurred.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .tree import ANNULUS, EXHAUSTED, OUTSIDE, ConstructionPlan, Walk, walk

FIXED, ANNULUS_EXIT, CORE_EXHAUSTED = 0, 1, 2
BRANCH_NAMES = ("fixed", "annulus-exit", "core-descent-exhausted")
_STATUS_TO_BRANCH = {OUTSIDE: FIXED, ANNULUS: ANNULUS_EXIT, EXHAUSTED: CORE_EXHAUSTED}


@dataclass
class MapEvaluation:
    """Images, walk depth, branch code and accumulated log Jacobian.

    Arrays have the shape of the input; ``branch`` holds codes into
    :data:`BRANCH_NAMES`.
    """

    image: np.ndarray
    depth_used: np.ndarray
    branch: np.ndarray
    log_jacobian: np.ndarray

    @property
    def branch_names(self) -> np.ndarray:
        return np.asarray(BRANCH_NAMES, dtype=object)[self.branch]

    def __len__(self) -> int:
        return int(np.size(self.image))


def _depth(plan: ConstructionPlan, N: int | None) -> int:
    N = plan.N_max if N is None else N
    if not 0 <= N <= plan.N_max:
        raise ValueError(f"depth {N} outside 0..{plan.N_max}")
    return N


def _compose(plan: ConstructionPlan, w: Walk, start: int, tail: np.ndarray, scale_tab) -> np.ndarray:
    """Map deepest-frame coordinates ``tail`` back out to the frame at ``start``."""
    v = tail
    for k in range(w.groups.shape[1] - 1, -1, -1):
        sel = w.depth > k
        if not sel.any():
            continue
        j = w.groups[sel, k]
        v[sel] = w.centers[sel, k] + np.exp(scale_tab[start + k, j]) * v[sel]
    return v


def _stretch_tail(plan: ConstructionPlan, w: Walk, start: int, inverse: bool) -> tuple[np.ndarray, np.ndarray]:
    """Deepest-frame image (and its log Jacobian) for the annulus exits."""
    tail = w.u.copy()
    logj = np.zeros(tail.size)
    a = np.nonzero(w.status == ANNULUS)[0]
    if a.size:
        lvl = start + w.depth[a]
        j = w.ann_group[a]
        lr = plan.tab_log_R[lvl, j]
        ls = plan.tab_log_sigma[lvl, j]
        y = w.u[a] - w.ann_center[a]
        if inverse:
            tail[a] = w.ann_center[a] + kernels.unstretch_offsets(y, lr, ls, plan.K)
        else:
            tail[a] = w.ann_center[a] + kernels.stretch_offsets(y, lr, ls, plan.K)
            logj[a] = kernels.stretch_log_jacobian(y, lr, ls, plan.K)
    return tail, logj


def _core_log_jacobian(plan: ConstructionPlan, w: Walk, start: int) -> np.ndarray:
    out = np.zeros(w.depth.size)
    for k in range(w.groups.shape[1]):
        sel = w.depth > k
        if sel.any():
            out[sel] += 2.0 * (1.0 - plan.K) * plan.tab_log_sigma[start + k, w.groups[sel, k]]
    return out


def evaluate_local(plan: ConstructionPlan, u, start: int = 0, N: int | None = None) -> MapEvaluation:
    """``phi`` restricted to the frame at depth ``start``, in that frame's coordinates.

    Only generations ``start+1..N`` act; the result is the local target
    coordinate of the image.
    """
    N = _depth(plan, N)
    shape = np.shape(u)
    w = walk(plan, u, N, start=start, side="source")
    tail, logj = _stretch_tail(plan, w, start, inverse=False)
    v = _compose(plan, w, start, tail, plan.tab_log_rho)
    logj += _core_log_jacobian(plan, w, start)
    branch = np.vectorize(_STATUS_TO_BRANCH.get, otypes=[np.int8])(w.status) if w.status.size \
        else np.zeros(0, np.int8)
    used = w.depth + (w.status == ANNULUS)
    return MapEvaluation(v.reshape(shape), used.reshape(shape), branch.reshape(shape),
                         logj.reshape(shape))


@dataclass
class ImagePath:
    """Target point as a path: children ``(groups, centers)`` of frames
    ``start..start+depth-1`` and the local coordinate ``tail`` in the last one."""

    groups: np.ndarray
    centers: np.ndarray
    depth: np.ndarray
    tail: np.ndarray


def evaluate_about(plan: ConstructionPlan, k: int, j: int, y, N: int | None = None) -> np.ndarray:
    """Image offsets of points ``c + y`` about a generating disk center ``c``.

    ``(k, j)`` names the generation-``k+1`` group of the disk (frame ``k``);
    the points must lie in that disk. Offsets avoid the rounding of ``c + y``.
    """
    N = _depth(plan, N)
    if k >= N:
        raise ValueError("generation beyond the evaluated depth")
    y = np.asarray(y, dtype=complex)
    shape = y.shape
    y = y.ravel()
    lr = plan.tab_log_R[k, j]
    ls = plan.tab_log_sigma[k, j]
    with np.errstate(divide="ignore"):
        L = np.log(np.abs(y)) - lr
    if np.any(L > 1e-12):
        raise ValueError("points outside the generating disk")
    out = kernels.stretch_offsets(y, np.full(y.size, lr), np.full(y.size, ls), plan.K)
    core = L < plan.K * ls
    if core.any():
        g = np.exp(plan.tab_log_g[k, j])
        out[core] = np.exp(plan.tab_log_rho[k, j]) * evaluate_local(plan, y[core] / g, k + 1, N).image
    return out.reshape(shape)


def image_path(plan: ConstructionPlan, u, start: int = 0, N: int | None = None) -> ImagePath:
    """``phi`` of local points of frame ``start``, kept in path form."""
    N = _depth(plan, N)
    w = walk(plan, u, N, start=start, side="source")
    tail, _ = _stretch_tail(plan, w, start, inverse=False)
    return ImagePath(w.groups, w.centers, w.depth, tail)


def evaluate(plan: ConstructionPlan, z, N: int | None = None) -> MapEvaluation:
    """``phi_N(z)`` for one point or an array of points."""
    return evaluate_local(plan, z, 0, N)


def evaluate_inverse(plan: ConstructionPlan, w, N: int | None = None, start: int = 0) -> np.ndarray:
    """``phi_N^{-1}(w)``; walks the target frames and inverts each stretch."""
    N = _depth(plan, N)
    shape = np.shape(w)
    wk = walk(plan, w, N, start=start, side="target")
    tail, _ = _stretch_tail(plan, wk, start, inverse=True)
    z = _compose(plan, wk, start, tail, plan.tab_log_g)
    return z.reshape(shape) if shape else complex(z[0])


def jacobian_at(plan: ConstructionPlan, z, N: int | None = None) -> np.ndarray:
    """Log area density of ``phi_N`` at ``z``."""
    lj = evaluate(plan, z, N).log_jacobian
    return lj if np.ndim(lj) else float(lj)


def limit_error_bound(plan: ConstructionPlan, N: int) -> float:
    """Sup distance between ``phi_N`` and the limit map: the largest depth-``N`` target diameter."""
    N = _depth(plan, N)
    total = 0.0
    for n in range(N):
        total += float(np.nanmax(plan.tab_log_rho[n]))
    return 2.0 * float(np.exp(total))


# --------------------------------------------------------------------------
# differences at small separations


@dataclass
class PairEvaluation:
    """``phi(u + d) - phi(u) = diff * exp(log_scale)`` in the frame at ``start``.

    ``groups``/``centers`` hold the shared descents (``common_depth`` of
    them) and ``local`` the first point in the deepest shared source frame,
    where ``diff`` is expressed.
    """

    image: np.ndarray
    diff: np.ndarray
    log_scale: np.ndarray
    common_depth: np.ndarray
    groups: np.ndarray
    centers: np.ndarray
    local: np.ndarray

    def log_abs_diff(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.diff)) + self.log_scale


def _stretch_difference(y, d, log_r, log_sigma, K):
    """``s(y + d) - s(y)`` for the annulus profile, accurate when ``|d| << |y|``."""
    a = 1.0 / K - 1.0
    L1 = np.log(np.abs(y)) - log_r
    q = d / y
    dL = 0.5 * np.log1p(2.0 * q.real + np.abs(q) ** 2)
    return d * np.exp(a * (L1 + dL)) + y * np.exp(a * L1) * np.expm1(a * dL)


def evaluate_pair(plan: ConstructionPlan, u, d, start: int = 0, N: int | None = None) -> PairEvaluation:
    """Image difference of ``u`` and ``u + d`` without cancellation.

    While both points sit in the same generating disk they descend
    together and ``d`` is rescaled exactly; a shared annulus uses a
    first-order-safe difference formula, and only points on different
    branches are evaluated separately and subtracted.
    """
    N = _depth(plan, N)
    u = np.array(u, dtype=complex).ravel()
    d = np.broadcast_to(np.asarray(d, dtype=complex), u.shape).copy()
    n = u.size
    image = evaluate_local(plan, u, start, N).image
    diff = d.copy()
    log_scale = np.zeros(n)
    common = np.zeros(n, dtype=np.int64)
    groups = np.full((n, N - start), -1, dtype=np.int64)
    centers = np.zeros((n, N - start), dtype=complex)
    x = u.copy()
    active = np.ones(n, dtype=bool)
    for k in range(start, N):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        gen = plan.generations[k]
        l1 = gen.locate(x[idx])
        l2 = gen.locate(x[idx] + d[idx])
        none = ~l1.found & ~l2.found
        active[idx[none]] = False
        diff[idx[none]] = d[idx[none]]
        same = l1.found & l2.found & (l1.center == l2.center)
        split = idx[~none & ~same]
        if split.size:
            v1 = evaluate_local(plan, x[split], k, N).image
            v2 = evaluate_local(plan, x[split] + d[split], k, N).image
            diff[split] = v2 - v1
            active[split] = False
        s = np.nonzero(same)[0]
        if s.size == 0:
            continue
        gi = idx[s]
        j = l1.group[s]
        c = l1.center[s]
        y1 = x[gi] - c
        y2 = y1 + d[gi]
        lr = plan.tab_log_R[k, j]
        inner = plan.K * plan.tab_log_sigma[k, j]
        with np.errstate(divide="ignore"):
            L1 = np.log(np.abs(y1)) - lr
            L2 = np.log(np.abs(y2)) - lr
        c1, c2 = L1 < inner, L2 < inner
        both = c1 & c2
        g = gi[both]
        groups[g, k - start] = j[both]
        centers[g, k - start] = c[both]
        sc = np.exp(plan.tab_log_g[k, j[both]])
        x[g] = y1[both] / sc
        d[g] = d[g] / sc
        log_scale[g] += plan.tab_log_rho[k, j[both]]
        common[g] += 1
        ann = ~c1 & ~c2
        a = gi[ann]
        if a.size:
            diff[a] = _stretch_difference(y1[ann], d[a], lr[ann], plan.tab_log_sigma[k, j[ann]], plan.K)
            active[a] = False
        mixed = gi[c1 != c2]
        if mixed.size:
            v1 = evaluate_local(plan, x[mixed], k, N).image
            v2 = evaluate_local(plan, x[mixed] + d[mixed], k, N).image
            diff[mixed] = v2 - v1
            active[mixed] = False
    # joint descents that ran out of generations: identity in the last frame
    diff[active] = d[active]
    return PairEvaluation(image, diff, log_scale, common, groups, centers, x)
