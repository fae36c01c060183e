import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcholder import _pykernels as py, kernels
from qcholder.packing import D0_RADIUS, tile_pattern

cy = pytest.importorskip("qcholder._ckernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 5.0))
def test_stretch_kernels_agree(seed, K):
    rng = np.random.default_rng(seed)
    y = rng.normal(size=500) + 1j * rng.normal(size=500)
    y *= 10.0 ** rng.uniform(-12, 0, 500)
    lr = rng.uniform(-10, 0, 500)
    ls = rng.uniform(-5, -0.1, 500)
    for name in ("stretch_offsets", "unstretch_offsets"):
        a = getattr(py, name)(y, lr, ls, K)
        b = getattr(cy, name)(y, lr, ls, K)
        assert np.allclose(a, b, rtol=1e-13, atol=0)
    a = py.stretch_log_jacobian(y, lr, ls, K)
    b = cy.stretch_log_jacobian(y, lr, ls, K)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_scalar_broadcast_and_shape():
    y = np.array([[0.1, 0.2j], [0.3, 0.0]])
    out = cy.stretch_offsets(y, np.log(0.5), np.log(0.1), 2.0)
    assert out.shape == (2, 2)
    assert np.allclose(out, py.stretch_offsets(y, np.log(0.5), np.log(0.1), 2.0))


def test_lattice_kernels_agree():
    args = (3e-4, 0.1e-4, 0.2e-4)
    assert cy.count_interior_tiles(*args) == py.count_interior_tiles(*args)
    assert cy.column_violations(*args) == py.column_violations(*args) == 0


def test_pattern_locate_agree(rng):
    pat = tile_pattern(8)
    wx, wy = rng.random(2000), rng.random(2000)
    a = py.pattern_locate(wx, wy, 8, pat.keys[:9], pat.level_start, D0_RADIUS)
    b = cy.pattern_locate(wx, wy, 8, pat.keys[:9], pat.level_start, D0_RADIUS)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
