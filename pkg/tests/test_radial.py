import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcholder import radial


@pytest.fixture
def stretch():
    return radial.RadialStretch(0.1 + 0.2j, 0.5, 0.1, 2.0)


def test_branches(stretch):
    c = stretch.center
    b = stretch.branch([c, c + 0.3, c + 0.6, c + stretch.inner_radius, c + 0.5])
    assert list(b) == [radial.CORE, radial.ANNULUS, radial.OUTSIDE, radial.ANNULUS, radial.ANNULUS]


def test_interface_continuity(stretch):
    e = np.exp(2j * np.pi * np.linspace(0, 1, 50))
    for r in (stretch.inner_radius, stretch.r):
        a = stretch.apply(stretch.center + r * (1 - 1e-13) * e)
        b = stretch.apply(stretch.center + r * (1 + 1e-13) * e)
        assert np.max(np.abs(a - b)) <= 1e-8 * r


def test_image_radii(stretch):
    c = stretch.center
    assert abs(stretch.apply(c + stretch.inner_radius) - c) == pytest.approx(stretch.image_inner_radius)
    r = 0.2
    want = r ** 0.5 * stretch.r ** 0.5
    assert abs(stretch.apply(c + r) - c) == pytest.approx(want, rel=1e-14)


def test_beltrami_values(stretch):
    c = stretch.center
    mu = stretch.beltrami([c + 0.3, c + 0.3j, c + 0.001, c + 0.9])
    assert np.abs(mu[:2]) == pytest.approx([1 / 3, 1 / 3], abs=1e-15)
    assert np.all(mu[2:] == 0)


def test_jacobian_integrates_to_annulus_image(stretch):
    # integral of J over the annulus equals the image annulus area
    s = np.linspace(stretch.inner_radius, stretch.r, 200001)
    J = stretch.jacobian(stretch.center + s)
    area = np.trapezoid(J * 2 * np.pi * s, s) if hasattr(np, "trapezoid") else np.trapz(J * 2 * np.pi * s, s)
    want = np.pi * (stretch.r ** 2 - stretch.image_inner_radius ** 2)
    assert area == pytest.approx(want, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 8.0), st.floats(1e-3, 0.5), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_roundtrip(K, sigma, x, y):
    st_ = radial.RadialStretch(0j, 0.7, sigma, K)
    z = complex(x, y)
    back = st_.invert(st_.apply(z))
    assert abs(back - z) <= 1e-12 * max(abs(z), 1e-300)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 6.0), st.floats(0.05, 0.95))
def test_dilatation_modulus(K, frac):
    st_ = radial.RadialStretch(0j, 1.0, 0.2, K)
    r = np.exp(np.log(st_.inner_radius) * (1 - frac))
    mu = st_.beltrami(np.array([r, 1j * r]))
    assert np.allclose(np.abs(mu), (K - 1) / (K + 1), atol=1e-12)
