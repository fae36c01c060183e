import math

import numpy as np
import pytest

from qcholder import measure as msr
from qcholder import tree


@pytest.fixture(scope="module")
def atoms(coarse_plan):
    g = coarse_plan.generations[0]
    c, R = [], []
    for j, cc, _ in g.iter_disks():
        c.append(cc)
        R.append(g.groups[j].R)
    return np.array(c), np.array(R) ** 2 / g.coverage


def test_weights_sum_to_one(plan):
    mu = msr.CantorMeasure(plan)
    for n in range(1, plan.N_max + 1):
        assert mu.weights(n).sum() == pytest.approx(1.0, abs=1e-12)


def test_cell_masses_sum(coarse_plan):
    mu = msr.CantorMeasure(coarse_plan)
    kids = list(tree.children(coarse_plan, tree.root_cell()))
    total = math.fsum(msr.cell_mass(mu, k.index) for k in kids)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_cauchy_matches_brute_force(coarse_plan, atoms, rng):
    c, m = atoms
    mu = msr.CantorMeasure(coarse_plan)
    w = np.concatenate([rng.uniform(-1.2, 1.2, 200) + 1j * rng.uniform(-1.2, 1.2, 200), [2.0, 5j]])
    tv = msr.cauchy_transform(mu, w, depth=1)
    exact = (m[None, :] / (w[:, None] - c[None, :])).sum(axis=1) / math.pi
    err = np.abs(tv.value - exact)
    assert np.max(err / np.abs(exact)) < 1e-3
    assert np.all(err <= tv.error + 1e-15)


def test_cauchy_far_field(plan):
    mu = msr.CantorMeasure(plan)
    w = np.array([1e3, 1e3j, -2e3])
    tv = msr.cauchy_transform(mu, w)
    np.testing.assert_allclose(tv.value, 1.0 / (math.pi * w), rtol=2e-3)


def test_source_side_rejected(plan):
    with pytest.raises(ValueError):
        msr.cauchy_transform(msr.CantorMeasure(plan, "source"), [2.0])
    with pytest.raises(ValueError):
        msr.CantorMeasure(plan, "middle")


def test_disk_mass_limits(plan):
    mu = msr.CantorMeasure(plan)
    assert msr.disk_mass(mu, 0j, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert msr.disk_mass(mu, 3.0 + 0j, 0.5) == 0.0
    assert msr.disk_mass(mu, 0j, 0.5, depth=0) == pytest.approx(0.25)


def test_disk_mass_matches_atoms(coarse_plan, atoms):
    c, m = atoms
    mu = msr.CantorMeasure(coarse_plan)
    for z, r in [(0.1 + 0.2j, 0.3), (-0.5 + 0j, 0.25), (0.0 + 0.7j, 0.2)]:
        inside = np.abs(c - z) <= r
        approx = msr.disk_mass(mu, z, r, depth=1)
        # the center-in model rounds boundary disks
        assert approx == pytest.approx(m[inside].sum(), abs=0.02)


@pytest.mark.parametrize("side", ["source", "target"])
def test_growth_stable(plan, side):
    mu = msr.CantorMeasure(plan, side)
    res = msr.growth_ratio(mu, mu.exponent, 4000, seed=3, depth=3)
    assert res.stability() <= 2.0
    assert res.sup < 50.0


def test_band_sups():
    lr = np.log(2.0) * -np.arange(40.0).repeat(30)
    st = np.zeros_like(lr)
    edges, sup = msr.band_sups(lr, st)
    assert edges.size == 11
    assert msr.band_stability(sup) == 1.0
    assert msr.band_stability(sup[:1]) == math.inf
