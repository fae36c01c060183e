"""Acceptance criteria at full sample sizes.

Each test prints one ``PASS``/``FAIL criterion N`` line and asserts the same
condition, runtime budget included. The lines are repeated in the terminal
summary, so they show without ``-s``.
"""
import math
import time

import numpy as np
import pytest

from qcholder import analysis, measure as msr

pytestmark = pytest.mark.acceptance

ALPHA, K = 0.5, 2.0
DEPTH = 3
SEED = 7
LINES: list[str] = []   # collected for the terminal summary


def report(n: int, title: str, checks: dict, seconds: float, budget: float) -> None:
    """``checks`` maps a label to ``(value, passed)``."""
    checks = dict(checks)
    checks["runtime s"] = (seconds, seconds < budget)
    ok = all(p for _, p in checks.values())
    detail = "; ".join(f"{k} = {v:.6g}{'' if p else ' (!)'}" for k, (v, p) in checks.items())
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title}: {detail}"
    LINES.append(line)
    print("\n" + line)
    assert ok, detail


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def test_criterion_01_exponent_identities():
    with Timer() as tm:
        rep = analysis.exponent_identity_suite(100, 100, 10 ** 4, seed=SEED)
    report(1, "exponent identities", {"max residual": (rep.max_residual, rep.max_residual <= 1e-12)},
           tm.seconds, 1.0)


def test_criterion_02_mass_sums(plan):
    with Timer() as tm:
        ms = analysis.mass_sum_check(plan)
    gap = max(ms["source"], ms["target"])
    prod = ms["product"]
    report(2, "per-generation mass sums",
           {"log gap": (gap, gap <= 1e-9),
            "min product": (min(prod), min(prod) >= 0.9 and max(prod) <= 1.0)},
           tm.seconds, 1.0)


def test_criterion_03_radial_block():
    r, s = 0.7, 0.1
    with Timer() as tm:
        rb = analysis.radial_block_check(K, s, r, 10 ** 4, seed=SEED)
    report(3, "radial block",
           {"continuity / r": (rb["continuity"], rb["continuity"] <= 1e-8),
            "roundtrip": (rb["roundtrip"], rb["roundtrip"] <= 1e-12),
            "Jacobian vs differences": (rb["jacobian_fd"], rb["jacobian_fd"] <= 1e-5),
            "|mu| error in annulus": (rb["beltrami_annulus"], rb["beltrami_annulus"] <= 1e-6),
            "|mu| outside": (rb["beltrami_outside"], rb["beltrami_outside"] == 0.0)},
           tm.seconds, 10.0)


def test_criterion_04_radius_law(plan):
    with Timer() as tm:
        err = analysis.radius_law_check(plan, DEPTH, 20, seed=SEED)
    report(4, "disk-image radius law", {"max relative error": (err, err <= 1e-9)}, tm.seconds, 10.0)


def test_criterion_05_map_holder(plan):
    h = plan.exponents.holder
    with Timer() as tm:
        res = analysis.empirical_holder(plan, "boundary-straddling", 10 ** 5, SEED, DEPTH)
    report(5, "Hoelder exponent of the map",
           {"envelope slope": (res.fit.slope, res.fit.slope >= h - 0.05),
            "extremal slope": (res.extremal.slope, res.extremal.slope <= h + 0.1)},
           tm.seconds, 300.0)


def test_criterion_06_jacobian_integral(plan):
    with Timer() as tm:
        res = analysis.jacobian_integral_test(plan, 10 ** 4, DEPTH, SEED)
    st = res.stability()
    report(6, "Jacobian integral condition",
           {"sup ratio": (res.sup, math.isfinite(res.sup)), "band ratio": (st, st <= 2.0)},
           tm.seconds, 300.0)


def test_criterion_07_dimensions(plan):
    ex = plan.exponents
    with Timer() as tm:
        src = analysis.box_dimension(plan, "source", DEPTH, samples=10 ** 6, seed=SEED)
        tgt = analysis.box_dimension(plan, "target", DEPTH, samples=10 ** 6, seed=SEED)
    report(7, "box-counting dimensions",
           {"source slope": (src.slope, abs(src.slope - ex.t) <= 0.15),
            "target slope": (tgt.slope, abs(tgt.slope - ex.t_prime) <= 0.15)},
           tm.seconds, 300.0)


def test_criterion_08_measure_growth(plan):
    mu = msr.CantorMeasure(plan, "target")
    with Timer() as tm:
        res = msr.growth_ratio(mu, plan.exponents.t_prime, 10 ** 4, SEED, DEPTH)
    st = res.stability()
    report(8, "measure growth",
           {"sup ratio": (res.sup, math.isfinite(res.sup)), "band ratio": (st, st <= 2.0)},
           tm.seconds, 120.0)


def test_criterion_09_witness(plan):
    with Timer() as tm:
        hol = analysis.holomorphy_residual(plan, 200, SEED, DEPTH)
        spread = analysis.witness_nonconstant(plan, DEPTH, SEED)
        wh = analysis.witness_holder(plan, 10 ** 4, SEED, DEPTH)
    report(9, "witness function",
           {"holomorphy residual": (hol, hol <= 1e-6),
            "spread": (spread, spread > 1e-6),
            "Hoelder slope": (wh.fit.slope, wh.fit.slope >= ALPHA - 0.07)},
           tm.seconds, 300.0)


def test_criterion_10_packing(plan):
    with Timer() as tm:
        rows = analysis.packing_check(plan)
    cov = min(r["coverage"] - r["target"] for r in rows)
    rad = min(r["radius_cap"] - r["max_radius"] for r in rows)
    single = max(r["single_pass"] for r in rows)
    report(10, "packing",
           {"coverage margin": (cov, cov >= 0.0),
            "radius margin": (rad, rad > 0.0),
            "disjoint generations": (sum(r["disjoint"] for r in rows), all(r["disjoint"] for r in rows)),
            "best single pass": (single, single <= 0.91)},
           tm.seconds, 60.0)
