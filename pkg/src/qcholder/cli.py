"""Command-line front end: ``qcholder <subcommand> [options]``.

Exit codes: 0 success, 1 invalid configuration, 2 a numerical property
failed, 3 input/output error. Each run writes ``<command>_summary.json``
plus its data files to ``--out`` (default
``$QCHOLDER_OUT`` or the current directory).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, kernels, measure, qcmap, tree
from .exponents import ExponentError, ExponentSet
from .packing import PackingError

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY, EXIT_IO = 0, 1, 2, 3
OUT_ENV = "QCHOLDER_OUT"
EVAL_COLUMNS = ["x", "y", "u", "v", "log_jacobian", "depth_used", "branch"]


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass
class RunConfig:
    command: str
    alpha: float = 0.5
    K: float = 2.0
    N_max: int = 4
    depth: int | None = None
    epsilon_anchor: float = 0.05
    seed: int = 0
    plan_file: str | None = None
    out: Path = field(default_factory=Path)
    threads: int = 0
    workers: int = 1
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.plan_file is None:
            ExponentSet.from_alpha(self.alpha, self.K)
        if not 1 <= self.N_max <= 8:
            raise ConfigError(f"--levels must lie in 1..8, got {self.N_max}")
        if self.depth is not None and not 0 <= self.depth <= self.N_max:
            raise ConfigError(f"--depth must lie in 0..{self.N_max}, got {self.depth}")
        if not 0.0 < self.epsilon_anchor < 0.5:
            raise ConfigError(f"--eps1 must lie in (0, 0.5), got {self.epsilon_anchor}")
        if self.threads < 0 or self.workers < 1:
            raise ConfigError("--threads must be >= 0 and --workers >= 1")
        for k, v in self.params.items():
            if k in ("samples", "pairs", "disks", "count", "grid", "witness_pairs") and v is not None and v < 1:
                raise ConfigError(f"--{k.replace('_', '-')} must be positive")

    @property
    def eval_depth(self) -> int:
        return self.N_max if self.depth is None else self.depth


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.5, help="target Hoelder exponent (0, 1)")
    p.add_argument("--K", type=float, default=2.0, help="dilatation bound >= 1")
    p.add_argument("--levels", type=int, default=4, help="generations in the plan")
    p.add_argument("--depth", type=int, default=None, help="evaluation depth (default: all levels)")
    p.add_argument("--eps1", type=float, default=0.05, help="first-generation gap fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plan", dest="plan_file", default=None, help="load a plan file instead of building")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--threads", type=int, default=0, help="threads for compiled kernels")
    p.add_argument("--workers", type=int, default=1, help="processes for sampled estimators")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcholder", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = sub.add_parser("plan", help="build and save a construction plan")
    _common(sp)
    sp = sub.add_parser("render", help="dump sampled cells at a depth")
    _common(sp)
    sp.add_argument("--count", type=int, default=1000)
    sp = sub.add_parser("eval", help="map points")
    _common(sp)
    sp.add_argument("--points", default=None, help="CSV with columns x,y")
    sp.add_argument("--grid", type=int, default=None, help="n x n grid on [-1, 1]^2")
    sp.add_argument("--inverse", action="store_true")
    sp = sub.add_parser("dim", help="box-counting dimensions")
    _common(sp)
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--grid-levels", type=int, default=None)
    sp = sub.add_parser("holder", help="Hoelder exponents of the map and the witness")
    _common(sp)
    sp.add_argument("--pairs", type=int, default=10 ** 5)
    sp.add_argument("--witness-pairs", type=int, default=10 ** 4)
    sp.add_argument("--source", choices=["boundary-straddling", "uniform"], default="boundary-straddling")
    sp = sub.add_parser("jacobian", help="Jacobian integral test")
    _common(sp)
    sp.add_argument("--disks", type=int, default=10 ** 4)
    sp = sub.add_parser("measure", help="growth of the natural measure")
    _common(sp)
    sp.add_argument("--samples", type=int, default=10 ** 4)
    sp.add_argument("--side", choices=["source", "target"], default="target")
    sp = sub.add_parser("cauchy", help="Cauchy transform on a grid")
    _common(sp)
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--extent", type=float, default=1.5)
    sp = sub.add_parser("verify", help="run every property check")
    _common(sp)
    sp.add_argument("--scale", type=float, default=1.0, help="multiplier for sample counts")
    return ap


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    d = vars(ns).copy()
    out = d.pop("out") or os.environ.get(OUT_ENV) or "."
    base = {k: d.pop(k) for k in ("command", "alpha", "K", "depth", "seed", "plan_file",
                                  "threads", "workers")}
    cfg = RunConfig(N_max=d.pop("levels"), epsilon_anchor=d.pop("eps1"), out=Path(out), params=d, **base)
    cfg.validate()
    return cfg


def load_plan(cfg: RunConfig) -> tree.ConstructionPlan:
    if cfg.plan_file:
        plan = tree.ConstructionPlan.loads(Path(cfg.plan_file).read_text())
        # --levels truncates a loaded plan but never deepens it
        if cfg.N_max < plan.N_max:
            plan = plan.truncated(cfg.N_max)
        cfg.N_max = plan.N_max
        if cfg.depth is not None and cfg.depth > plan.N_max:
            raise ConfigError(f"--depth {cfg.depth} exceeds the plan's {plan.N_max} levels")
        return plan
    return tree.build_plan(cfg.alpha, cfg.K, cfg.N_max, seed=cfg.seed, eps1=cfg.epsilon_anchor)


def _num(x) -> str:
    # shortest round-tripping text for any float-like value
    return repr(float(x))


def _write_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        analysis.write_summary_json(obj, fh)


def _plan_summary(plan: tree.ConstructionPlan) -> dict:
    ex = plan.exponents
    return {"alpha": ex.alpha, "K": ex.K, "t": ex.t, "t_prime": ex.t_prime, "holder": ex.holder,
            "levels": plan.N_max, "coverage": list(plan.coverage), "seed": plan.seed}


def _tolerance(value: float, lo: float, hi: float) -> dict:
    return {"value": value, "low": lo, "high": hi, "passed": bool(lo <= value <= hi)}


# --------------------------------------------------------------------------
# subcommands; each returns (summary dict, passed)


def cmd_plan(cfg, plan):
    (cfg.out / "plan.json").write_text(plan.dumps())
    return _plan_summary(plan), True


def cmd_render(cfg, plan):
    cells = tree.sample_cells(plan, cfg.eval_depth, cfg.params["count"], cfg.seed)
    with open(cfg.out / "cells.csv", "w", newline="") as fh:
        tree.write_cells_csv(cells, fh)
    return {"cells": len(cells), "depth": cfg.eval_depth}, True


def _read_points(path: str) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"x", "y"} <= set(rows[0]):
        raise ConfigError("points file needs columns x and y")
    return np.array([complex(float(r["x"]), float(r["y"])) for r in rows], dtype=complex)


def cmd_eval(cfg, plan):
    p = cfg.params
    if p["points"]:
        z = _read_points(p["points"])
    else:
        n = p["grid"] or 33
        xs = np.linspace(-1.0, 1.0, n)
        z = (xs[None, :] + 1j * xs[:, None]).ravel()
    N = cfg.eval_depth
    if p["inverse"]:
        w = np.atleast_1d(qcmap.evaluate_inverse(plan, z, N))
        lj = -qcmap.evaluate(plan, w, N).log_jacobian
        ev = qcmap.MapEvaluation(w, np.zeros(z.size, np.int64), np.zeros(z.size, np.int8), lj)
    else:
        ev = qcmap.evaluate(plan, z, N)
    names = ev.branch_names
    with open(cfg.out / "eval.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(EVAL_COLUMNS)
        for i in range(z.size):
            wr.writerow([_num(z[i].real), _num(z[i].imag), _num(ev.image[i].real), _num(ev.image[i].imag),
                         _num(ev.log_jacobian[i]), int(ev.depth_used[i]), names[i]])
    counts = {b: int(np.sum(names == b)) for b in qcmap.BRANCH_NAMES}
    return {"points": int(z.size), "depth": N, "branches": counts}, True


def cmd_dim(cfg, plan):
    ex = plan.exponents
    out, ok = {}, True
    for side, target in (("source", ex.t), ("target", ex.t_prime)):
        fit = analysis.box_dimension(plan, side, cfg.eval_depth, cfg.params["grid_levels"],
                                     cfg.params["samples"], cfg.seed)
        with open(cfg.out / f"dim_{side}.csv", "w") as fh:
            analysis.write_scaling_csv(fit.scales, fit.statistics, fh, ("log_side", "log_count"))
        want = 2.0 if cfg.eval_depth == 0 else target
        out[side] = {**fit.to_dict(), "expected": want, **_tolerance(fit.slope, want - 0.15, want + 0.15)}
        ok &= out[side]["passed"]
    return out, ok


def cmd_holder(cfg, plan):
    ex = plan.exponents
    p = cfg.params
    N = cfg.eval_depth
    res = analysis.empirical_holder(plan, p["source"], p["pairs"], cfg.seed, N, workers=cfg.workers)
    with open(cfg.out / "holder_map.csv", "w") as fh:
        analysis.write_scaling_csv(res.fit.scales, res.fit.statistics, fh, ("log_separation", "log_sup_diff"))
    out = {"map": {**res.to_dict(), "expected": ex.holder,
                   "envelope": _tolerance(res.fit.slope, ex.holder - 0.05, math.inf)}}
    ok = out["map"]["envelope"]["passed"]
    if res.extremal is not None:
        out["map"]["extremal"] = _tolerance(res.extremal.slope, -math.inf, ex.holder + 0.1)
        ok &= out["map"]["extremal"]["passed"]
    if N > 0 and not math.isnan(ex.alpha):
        wr = analysis.witness_holder(plan, p["witness_pairs"], cfg.seed, N, cfg.workers)
        with open(cfg.out / "holder_witness.csv", "w") as fh:
            analysis.write_scaling_csv(wr.fit.scales, wr.fit.statistics, fh, ("log_separation", "log_sup_diff"))
        out["witness"] = {**wr.to_dict(), "expected": ex.alpha,
                          "envelope": _tolerance(wr.fit.slope, ex.alpha - 0.07, math.inf)}
        ok &= out["witness"]["envelope"]["passed"]
    return out, ok


def cmd_jacobian(cfg, plan):
    res = analysis.jacobian_integral_test(plan, cfg.params["disks"], cfg.eval_depth, cfg.seed, cfg.workers)
    with open(cfg.out / "jacobian.csv", "w") as fh:
        analysis.write_scaling_csv(res.band_edges, res.band_sup, fh, ("log_radius_band", "log_sup_ratio"))
    out = res.to_dict()
    out["stable"] = _tolerance(res.stability(), 0.0, 2.0)
    return out, bool(np.isfinite(res.sup)) and out["stable"]["passed"]


def cmd_measure(cfg, plan):
    mu = measure.CantorMeasure(plan, cfg.params["side"])
    res = measure.growth_ratio(mu, mu.exponent, cfg.params["samples"], cfg.seed, cfg.eval_depth)
    with open(cfg.out / "growth.csv", "w") as fh:
        analysis.write_scaling_csv(res.band_edges, res.band_sup, fh, ("log_radius_band", "log_sup_ratio"))
    out = {"side": mu.side, "exponent": res.exponent, "sup": res.sup,
           "band_edges": res.band_edges, "band_sup": res.band_sup,
           "stable": _tolerance(res.stability(), 0.0, 2.0)}
    return out, bool(np.isfinite(res.sup)) and out["stable"]["passed"]


def cmd_cauchy(cfg, plan):
    n = cfg.params["grid"]
    ext = cfg.params["extent"]
    xs = np.linspace(-ext, ext, n)
    w = (xs[None, :] + 1j * xs[:, None]).ravel()
    mu = measure.CantorMeasure(plan, "target")
    tv = measure.cauchy_transform(mu, w, cfg.eval_depth)
    with open(cfg.out / "cauchy.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "re", "im", "error"])
        for wi, vi, ei in zip(w, tv.value, tv.error):
            wr.writerow([_num(wi.real), _num(wi.imag), _num(vi.real), _num(vi.imag), _num(ei)])
    finite = np.isfinite(tv.error)
    return {"points": int(w.size), "max_error": float(np.max(tv.error[finite])) if finite.any() else None,
            "atom_hits": int((~finite).sum())}, True


def cmd_verify(cfg, plan):
    checks = analysis.verify_suite(plan, cfg.eval_depth, cfg.seed, cfg.params["scale"], cfg.workers)
    for c in checks:
        mark = "ok  " if c.passed else "FAIL"
        print(f"{mark} {c.name}: {c.value:.6g} {c.relation} {c.threshold:.6g} ({c.seconds:.1f} s)")
    return {"plan": _plan_summary(plan), "checks": [c.to_dict() for c in checks]}, all(c.passed for c in checks)


COMMANDS = {"plan": cmd_plan, "render": cmd_render, "eval": cmd_eval, "dim": cmd_dim,
            "holder": cmd_holder, "jacobian": cmd_jacobian, "measure": cmd_measure,
            "cauchy": cmd_cauchy, "verify": cmd_verify}


def run(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except (ConfigError, ExponentError) as exc:
        print(f"qcholder: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    kernels.set_threads(cfg.threads)
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        plan = load_plan(cfg)
        summary, ok = COMMANDS[cfg.command](cfg, plan)
        summary = {"command": cfg.command, "passed": bool(ok), **summary}
        _write_json(cfg.out / f"{cfg.command}_summary.json", summary)
    except OSError as exc:
        print(f"qcholder: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ExponentError, PackingError, analysis.SaturationError, ValueError, KeyError) as exc:
        print(f"qcholder: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"command": cfg.command, "passed": summary["passed"],
                      "seconds": round(time.perf_counter() - t0, 3), "backend": kernels.BACKEND}))
    return EXIT_OK if ok else EXIT_PROPERTY


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
