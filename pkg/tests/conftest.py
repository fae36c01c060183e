import sys

import numpy as np
import pytest

from qcholder import packing, tree
from qcholder.exponents import ExponentSet


@pytest.fixture(scope="session")
def plan():
    """Default plan: alpha = 0.5, K = 2, four generations."""
    return tree.build_plan(0.5, 2.0, 4)


@pytest.fixture(scope="session")
def coarse_plan():
    """Two copies of one coarse packing (a few thousand disks): small enough
    for brute-force comparisons."""
    ex = ExponentSet.from_alpha(0.5, 2.0)
    g = packing.pack_unit_disk(0.2, 0.1, ex.t, ex.K, seed=1, sigma_max=0.9)
    return tree.ConstructionPlan(ex, [g, g], sigma_max=0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
