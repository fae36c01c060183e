import io
import math

import numpy as np
import pytest

from qcholder import tree


def test_plan_checks(plan):
    plan.check()
    assert plan.N_max == 4
    assert math.prod(plan.coverage) >= 0.9


@pytest.mark.parametrize("side,attr", [("source", "t"), ("target", "t_prime")])
def test_hausdorff_sum_is_coverage_product(plan, side, attr):
    e = getattr(plan.exponents, attr)
    for N in range(plan.N_max + 1):
        lhs = tree.hausdorff_log_sum(plan, N, e, side)
        assert lhs == pytest.approx(sum(math.log(c) for c in plan.coverage[:N]), abs=1e-9)


def test_dumps_loads_roundtrip(coarse_plan):
    back = tree.ConstructionPlan.loads(coarse_plan.dumps())
    assert back.dumps() == coarse_plan.dumps()
    np.testing.assert_array_equal(back.tab_log_g, coarse_plan.tab_log_g)


def test_loads_rejects_bad_documents():
    with pytest.raises(ValueError):
        tree.ConstructionPlan.from_dict({"format": "other"})
    with pytest.raises(ValueError):
        tree.ConstructionPlan.from_dict({"format": tree.PLAN_FORMAT, "version": 99})


def test_sampling_reproducible(plan):
    a = tree.sample_paths(plan, 3, 100, seed=4)
    b = tree.sample_paths(plan, 3, 100, seed=4)
    np.testing.assert_array_equal(a.groups, b.groups)
    np.testing.assert_array_equal(a.centers, b.centers)


def test_cell_from_index_matches_sample(plan):
    batch = tree.sample_paths(plan, 3, 5, seed=1)
    for i, cell in enumerate(batch.cells()):
        again = tree.cell_from_index(plan, batch.index(i))
        # keys rebuild centers through a different summation order
        np.testing.assert_allclose(again.local_centers, cell.local_centers, rtol=0, atol=1e-15)
        assert abs(again.source_center - cell.source_center) < 1e-15
        assert again.log_target_radius == cell.log_target_radius


def test_cell_radii(plan):
    batch = tree.sample_paths(plan, 2, 50, seed=2)
    K = plan.K
    ls = plan.tab_log_sigma[np.arange(2), batch.groups].sum(axis=1)
    np.testing.assert_allclose(batch.log_source_radius() - batch.log_target_radius(), (K - 1) * ls)


def test_locate_depth_one(plan, rng):
    batch = tree.sample_paths(plan, 1, 20, seed=3)
    for z in batch.source_center():
        cell, cls = tree.locate(plan, complex(z), depth=1)
        assert cls == "core"
        assert cell.depth == 1
        assert abs(cell.source_center - z) < 1e-12
    cell, cls = tree.locate(plan, 0.9999999 + 0j, depth=1)
    assert cls in ("outside-all", "annulus", "core")


def test_children_of_coarse_root(coarse_plan):
    kids = list(tree.children(coarse_plan, tree.root_cell()))
    assert len(kids) == coarse_plan.generations[0].n_disks
    buf = io.StringIO()
    tree.write_cells_csv(kids[:3], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == tree.CELL_COLUMNS
    assert len(lines) == 4


def test_single_disk_plan():
    p = tree.single_disk_plan(2.0)
    cell, cls = tree.locate(p, 0.01 + 0j)
    assert cls == "core"
    cell, cls = tree.locate(p, 0.4 + 0j)
    assert cls == "annulus"
    cell, cls = tree.locate(p, 0.9 + 0j)
    assert cls == "outside-all" and cell.depth == 0
