"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
NumPy versions in ``_pykernels`` are used. Setting ``QCHOLDER_PURE_PYTHON=1``
forces the fallback.
"""
from __future__ import annotations

import functools
import os

from . import _pykernels

_ck = None
if os.environ.get("QCHOLDER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _ck  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _ck = None

_impl = _ck if _ck is not None else _pykernels
BACKEND = _impl.BACKEND

stretch_offsets = _impl.stretch_offsets
unstretch_offsets = _impl.unstretch_offsets
stretch_log_jacobian = _impl.stretch_log_jacobian
_threads = 0


def set_threads(n: int) -> None:
    """Worker threads for parallel kernels (0 = single thread)."""
    global _threads
    _threads = max(0, int(n))


@functools.lru_cache(maxsize=64)
def count_interior_tiles(delta: float, off_x: float, off_y: float) -> int:
    return _impl.count_interior_tiles(delta, off_x, off_y, _threads)

@functools.lru_cache(maxsize=64)
def column_violations(delta: float, off_x: float, off_y: float) -> int:
    return _impl.column_violations(delta, off_x, off_y, _threads)


pattern_locate = _impl.pattern_locate

# cheap helpers that stay in NumPy
tile_is_interior = _pykernels.tile_is_interior
column_range = _pykernels.column_range
column_bounds = _pykernels.column_bounds
