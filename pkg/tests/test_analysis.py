import io
import json
import math

import numpy as np
import pytest

from qcholder import analysis, tree


@pytest.fixture(scope="module")
def flat_plan():
    # K = 1: every stretch is the identity
    return tree.build_plan(0.5, 1.0, 2)


def test_scaling_fit():
    s = np.log([1.0, 0.5, 0.25, 0.125])
    f = analysis.ScalingFit.fit(s, 1.5 * s + 2.0)
    assert f.slope == pytest.approx(1.5)
    assert f.intercept == pytest.approx(2.0)
    assert f.residual < 1e-12
    with pytest.raises(ValueError):
        analysis.ScalingFit.fit([0.0, -1.0], [0.0, 1.0])
    with pytest.raises(ValueError):
        analysis.ScalingFit.fit([0.0, 0.0, -1.0], [0.0, 1.0, 2.0])


def test_depth_zero_dimension(plan):
    f = analysis.box_dimension(plan, "source", depth=0, grid_levels=6, samples=2 * 10 ** 5, seed=1)
    assert f.slope == pytest.approx(2.0, abs=0.1)
    with pytest.raises(analysis.SaturationError):
        analysis.box_dimension(plan, "source", depth=0, grid_levels=9, samples=10 ** 4)
    with pytest.raises(ValueError):
        analysis.box_dimension(plan, "middle")


def test_annulus_image_area_limits():
    R, ls, K = 0.1, math.log(0.05), 2.0
    full = analysis.annulus_image_area(0.0, 1.0, R, ls, K)
    assert full[0] == pytest.approx(math.pi * R * R * (1.0 - math.exp(2 * ls)), rel=1e-12)
    assert analysis.annulus_image_area(1.0, 0.5, R, ls, K)[0] == 0.0


def test_annulus_image_area_identity():
    # K = 1 leaves the annulus fixed: the area is the plain overlap
    from qcholder import spatial
    d, eps, R, ls = 0.08, 0.05, 0.1, math.log(0.3)
    got = analysis.annulus_image_area(d, eps, R, ls, 1.0)[0]
    want = spatial.lens_area(d, eps, R) - spatial.lens_area(d, eps, 0.3 * R)
    assert got == pytest.approx(want, rel=1e-9)


def test_image_area_of_large_disk(plan):
    la = analysis.log_image_area(plan, [], [], 0, 0j, math.log(2.0), plan.N_max)
    assert la == pytest.approx(math.log(4.0 * math.pi), abs=1e-9)


def test_image_area_away_from_protecting_disks():
    p = tree.single_disk_plan(2.0, R=0.5)
    la = analysis.log_image_area(p, [], [], 0, 0.9 + 0j, math.log(0.05), 1)
    assert la == pytest.approx(math.log(math.pi * 0.05 ** 2), abs=1e-12)


def test_flat_plan_holder(flat_plan):
    res = analysis.empirical_holder(flat_plan, "uniform", 4000, seed=2, extremal=False)
    assert res.fit.slope == pytest.approx(1.0, abs=0.02)


def test_holder_reproducible(plan):
    a = analysis.empirical_holder(plan, pairs=3000, seed=9, depth=2, extremal=False)
    b = analysis.empirical_holder(plan, pairs=3000, seed=9, depth=2, extremal=False, workers=2)
    np.testing.assert_array_equal(a.log_sep, b.log_sep)
    np.testing.assert_array_equal(a.log_diff, b.log_diff)
    with pytest.raises(ValueError):
        analysis.empirical_holder(plan, "random", 3000)
    with pytest.raises(ValueError):
        analysis.empirical_holder(plan, pairs=10)


def test_holder_slope_default_plan(plan):
    res = analysis.empirical_holder(plan, pairs=20000, seed=1, depth=3)
    h = plan.exponents.holder
    assert res.fit.slope >= h - 0.05
    assert res.extremal.slope <= h + 0.1


def test_jacobian_integral(plan):
    res = analysis.jacobian_integral_test(plan, 2000, depth=2, seed=4)
    assert res.stability() <= 2.0
    assert res.sup < 10.0
    assert res.exponent == pytest.approx(2.0 * plan.exponents.holder)


def test_identity_suite():
    rep = analysis.exponent_identity_suite(20, 20, 1000, seed=3)
    assert rep.passed and rep.max_residual <= 1e-12


def test_radial_block_check():
    r = analysis.radial_block_check(points=2000)
    assert r["continuity"] <= 1e-8
    assert r["roundtrip"] <= 1e-12
    assert r["beltrami_annulus"] <= 1e-6


def test_plan_level_checks(plan):
    assert analysis.radius_law_check(plan, 2, 10) <= 1e-9
    ms = analysis.mass_sum_check(plan)
    assert max(ms["source"], ms["target"]) <= 1e-9
    for row in analysis.packing_check(plan):
        assert row["disjoint"]
        assert row["coverage"] >= row["target"]
        assert row["max_radius"] <= row["radius_cap"]


def test_check_relation():
    assert analysis.Check("a", 1.0, 2.0, "<=").passed
    assert not analysis.Check("a", 3.0, 2.0, "<=").passed
    assert not analysis.Check("a", math.nan, 2.0, ">=").passed
    assert "seconds" not in analysis.Check("a", 1.0, 2.0, "<=", 5.0).to_dict()


def test_writers():
    buf = io.StringIO()
    analysis.write_scaling_csv([0.0, -1.0], [1.0, 2.0], buf)
    assert buf.getvalue().splitlines()[0] == "log_scale,statistic"
    buf = io.StringIO()
    analysis.write_summary_json({"x": np.float64(1.5), "y": np.arange(2)}, buf)
    assert json.loads(buf.getvalue()) == {"x": 1.5, "y": [0, 1]}
