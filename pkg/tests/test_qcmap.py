import numpy as np
import pytest

from qcholder import qcmap, tree


def _disk_points(rng, n, r=0.999):
    z = np.sqrt(rng.random(n)) * np.exp(2j * np.pi * rng.random(n))
    return r * z


def test_inverse_roundtrip(plan, rng):
    z = _disk_points(rng, 2000)
    w = qcmap.evaluate(plan, z).image
    back = qcmap.evaluate_inverse(plan, w)
    assert np.max(np.abs(back - z)) < 1e-12


def test_fixed_outside_disk(plan):
    z = np.array([1.5, -2j, 1.0 + 1.0j])
    ev = qcmap.evaluate(plan, z)
    np.testing.assert_array_equal(ev.image, z)
    assert list(ev.branch_names) == ["fixed"] * 3


def test_branches_present(plan, rng):
    ev = qcmap.evaluate(plan, _disk_points(rng, 5000))
    assert set(ev.branch_names) <= set(qcmap.BRANCH_NAMES)
    assert "annulus-exit" in set(ev.branch_names)
    assert "fixed" in set(ev.branch_names)


def test_identity_when_K_is_one():
    p = tree.single_disk_plan(1.0, depth=2)
    z = np.array([0.01, 0.3 + 0.1j, -0.2j])
    ev = qcmap.evaluate(p, z)
    np.testing.assert_allclose(ev.image, z, atol=1e-15)
    np.testing.assert_allclose(ev.log_jacobian, 0.0, atol=1e-15)


def test_radius_law(plan, rng):
    batch = tree.sample_paths(plan, 1, 20, seed=5)
    K = plan.K
    for j in batch.groups[:, 0]:
        lr, ls = plan.tab_log_R[0, j], plan.tab_log_sigma[0, j]
        for s in (0.5, 0.9, 1.0):
            y = s * np.exp(lr) * np.exp(2j * np.pi * rng.random(8))
            v = qcmap.evaluate_about(plan, 0, j, y)
            assert np.allclose(np.abs(v), s ** (1.0 / K) * np.exp(lr), rtol=1e-12)


def test_evaluate_about_rejects_outside(plan):
    lr = plan.tab_log_R[0, 0]
    with pytest.raises(ValueError):
        qcmap.evaluate_about(plan, 0, 0, [2.0 * np.exp(lr)])


def test_pair_matches_direct(plan, rng):
    u = _disk_points(rng, 2000)
    d = 1e-4 * np.exp(2j * np.pi * rng.random(u.size))
    pe = qcmap.evaluate_pair(plan, u, d)
    direct = qcmap.evaluate(plan, u + d).image - qcmap.evaluate(plan, u).image
    got = pe.diff * np.exp(pe.log_scale)
    assert np.max(np.abs(got - direct)) < 1e-10


def test_limit_error_bound_decreases(plan):
    b = [qcmap.limit_error_bound(plan, n) for n in range(1, plan.N_max + 1)]
    assert all(x > y for x, y in zip(b, b[1:]))
    with pytest.raises(ValueError):
        qcmap.evaluate(plan, [0.1], N=plan.N_max + 1)
