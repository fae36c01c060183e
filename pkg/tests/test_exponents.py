import math

import pytest
from hypothesis import given, strategies as st

from qcholder import exponents as E


def test_default_exponents():
    ex = E.ExponentSet.from_alpha(0.5, 2.0)
    assert ex.t == pytest.approx(4 / 3)
    assert ex.t_prime == pytest.approx(1.6)
    assert ex.holder == pytest.approx(5 / 6)
    assert (ex.t_prime - 1) * ex.holder == pytest.approx(0.5, abs=1e-15)
    ex.check()


def test_K_one_is_conformal():
    ex = E.ExponentSet.from_alpha(0.5, 1.0)
    assert ex.t == pytest.approx(1.5) and ex.t_prime == pytest.approx(1.5)
    assert ex.holder == pytest.approx(1.0)


@pytest.mark.parametrize("alpha,K", [(0.0, 2.0), (1.0, 2.0), (0.5, 0.5), (0.5, math.inf), (math.nan, 2.0)])
def test_invalid_inputs(alpha, K):
    with pytest.raises(E.ExponentError):
        E.critical_dimension(alpha, K)


def test_sigma_exponent_relation():
    t, K = 4 / 3, 2.0
    R = 1e-6
    s = E.sigma_from_R(R, t, K, sigma_max=1.0)
    # R**(2-t) = sigma**(tK)
    assert (2 - t) * math.log(R) == pytest.approx(t * K * math.log(s), rel=1e-12)


@given(st.floats(0.01, 0.99), st.floats(1.0, 50.0))
def test_identities_hold(alpha, K):
    t = E.critical_dimension(alpha, K)
    tp = E.stretched_dimension(t, K)
    h = E.holder_exponent(t, K)
    assert abs((tp - 1) * t / tp - alpha) < 1e-12
    assert abs(t / tp - h) < 1e-12
    assert 0 < t <= tp < 2
    assert 1 / K - 1e-12 <= h <= 1 + 1e-12
