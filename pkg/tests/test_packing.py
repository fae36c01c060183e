import math

import numpy as np
import pytest

from qcholder import packing
from qcholder.exponents import ExponentSet

EX = ExponentSet.from_alpha(0.5, 2.0)


@pytest.fixture(scope="module")
def small():
    return packing.pack_unit_disk(0.1, 0.02, EX.t, EX.K, seed=3, sigma_max=0.9)


def test_epsilon_schedule():
    assert packing.epsilon_schedule(1) == 0.05
    assert packing.epsilon_schedule(3) == pytest.approx(0.0125)
    with pytest.raises(ValueError):
        packing.epsilon_schedule(0)


def test_coverage_and_caps(small):
    assert small.coverage >= 0.9
    assert max(g.R for g in small.groups) < 0.02
    assert packing.validate_disjoint(small)


def test_coverage_matches_enumeration(small):
    # normalized area: disk count times R**2
    total = sum(g.m * g.R ** 2 for g in small.groups)
    assert total == pytest.approx(small.coverage, rel=1e-12)


def test_one_pass_is_not_enough(small):
    one = small.with_passes(0)
    assert one.coverage <= 0.91
    assert len({g.R for g in one.groups}) == 1


def test_single_pass_fractions(small):
    area = small.pattern.area
    for q in range(small.P + 1):
        assert area[q] - (area[q - 1] if q else 0.0) <= math.pi / math.sqrt(12)


def test_enumerated_disks_disjoint(small):
    c, R = [], []
    for j, cc, _ in small.iter_disks():
        c.append(cc)
        R.append(small.groups[j].R)
    c, R = np.array(c), np.array(R)
    assert packing._validate_explicit(c, R)
    assert len(c) == small.n_disks


def test_locate_and_sample_consistent(small, rng):
    g, c, _ = small.sample(rng, 500)
    loc = small.locate(c)
    assert loc.found.all()
    assert np.array_equal(loc.group, g)


def test_roundtrip_dict(small):
    back = packing.packing_from_dict(small.to_dict())
    assert back.coverage == small.coverage
    assert back.n_disks == small.n_disks


def test_explicit_overlap_detected():
    bad = packing.ExplicitPacking([0.3], [[0.0, 0.5]], EX.t, EX.K, sigma_max=1.0)
    assert not packing.validate_disjoint(bad)
    ok = packing.ExplicitPacking([0.2], [[-0.5, 0.5]], EX.t, EX.K, sigma_max=1.0)
    assert packing.validate_disjoint(ok)


def test_unreachable_target_raises():
    with pytest.raises(packing.PackingError):
        packing.pack_unit_disk(1e-6, 0.05, EX.t, EX.K, max_passes=2, sigma_max=0.9)
    with pytest.raises(ValueError):
        packing.pack_unit_disk(1.5, 0.05, EX.t, EX.K)
