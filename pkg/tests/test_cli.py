import csv
import json
import subprocess
import sys

import pytest

from qcholder import cli


@pytest.fixture(scope="module")
def plan_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("plan")
    assert cli.run(["plan", "--levels", "3", "--seed", "0", "--out", str(out)]) == cli.EXIT_OK
    return out / "plan.json"


def _run(tmp_path, *args):
    return cli.run(list(args) + ["--out", str(tmp_path)])


def test_plan_summary(plan_file):
    summary = json.loads((plan_file.parent / "plan.json").read_text())
    assert summary["format"] == "qcholder-plan"
    rep = json.loads((plan_file.parent / "plan_summary.json").read_text())
    assert rep["command"] == "plan" and rep["passed"]
    assert rep["t"] == pytest.approx(4.0 / 3.0)


def test_flat_plan_exponents(tmp_path):
    assert _run(tmp_path, "plan", "--alpha", "0.5", "--K", "1", "--levels", "1") == cli.EXIT_OK
    s = json.loads((tmp_path / "plan.json").read_text())
    assert float(s["exponents"]["t"]) == pytest.approx(1.5)
    assert float(s["exponents"]["t_prime"]) == pytest.approx(1.5)


def test_eval_columns(tmp_path, plan_file):
    assert _run(tmp_path, "eval", "--plan", str(plan_file), "--grid", "5") == cli.EXIT_OK
    with open(tmp_path / "eval.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == cli.EVAL_COLUMNS
    assert len(rows) == 26
    summary = json.loads((tmp_path / "eval_summary.json").read_text())
    assert sum(summary["branches"].values()) == 25


def test_eval_points_and_inverse(tmp_path, plan_file):
    pts = tmp_path / "pts.csv"
    pts.write_text("x,y\n0.1,0.2\n-0.5,0.3\n")
    assert _run(tmp_path, "eval", "--plan", str(plan_file), "--points", str(pts)) == cli.EXIT_OK
    with open(tmp_path / "eval.csv") as fh:
        rows = list(csv.DictReader(fh))
    img = tmp_path / "img.csv"
    img.write_text("x,y\n" + "".join(f"{r['u']},{r['v']}\n" for r in rows))
    assert _run(tmp_path, "eval", "--plan", str(plan_file), "--points", str(img), "--inverse") == cli.EXIT_OK
    with open(tmp_path / "eval.csv") as fh:
        back = list(csv.DictReader(fh))
    assert float(back[0]["u"]) == pytest.approx(0.1, abs=1e-12)
    assert float(back[1]["v"]) == pytest.approx(0.3, abs=1e-12)


def test_outputs_deterministic(tmp_path, plan_file):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert cli.run(["measure", "--plan", str(plan_file), "--samples", "1500", "--out", str(d)]) == 0
    for name in ("measure_summary.json", "growth.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_render_and_cauchy(tmp_path, plan_file):
    assert _run(tmp_path, "render", "--plan", str(plan_file), "--count", "10") == cli.EXIT_OK
    assert len((tmp_path / "cells.csv").read_text().splitlines()) == 11
    assert _run(tmp_path, "cauchy", "--plan", str(plan_file), "--grid", "6", "--depth", "2") == cli.EXIT_OK
    assert len((tmp_path / "cauchy.csv").read_text().splitlines()) == 37


@pytest.mark.parametrize("args", [
    ["plan", "--alpha", "1.5"],
    ["plan", "--K", "0.5"],
    ["plan", "--levels", "0"],
    ["eval", "--bogus"],
    ["nosuchcommand"],
])
def test_malformed_config(tmp_path, args):
    assert _run(tmp_path, *args) == cli.EXIT_CONFIG


def test_bad_points_file(tmp_path, plan_file):
    pts = tmp_path / "pts.csv"
    pts.write_text("a,b\n1,2\n")
    assert _run(tmp_path, "eval", "--plan", str(plan_file), "--points", str(pts)) == cli.EXIT_CONFIG


def test_io_errors(tmp_path, plan_file):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.run(["plan", "--levels", "1", "--out", str(blocker)]) == cli.EXIT_IO
    assert _run(tmp_path, "eval", "--plan", str(tmp_path / "missing.json")) == cli.EXIT_IO


def test_property_failure(tmp_path, plan_file, monkeypatch):
    monkeypatch.setitem(cli.COMMANDS, "eval", lambda cfg, plan: ({"why": "forced"}, False))
    assert _run(tmp_path, "eval", "--plan", str(plan_file)) == cli.EXIT_PROPERTY
    assert json.loads((tmp_path / "eval_summary.json").read_text())["passed"] is False


def test_out_from_environment(tmp_path, plan_file, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.run(["eval", "--plan", str(plan_file), "--grid", "3"]) == cli.EXIT_OK
    assert (tmp_path / "env" / "eval.csv").exists()


def test_module_entry_point(tmp_path, plan_file):
    r = subprocess.run([sys.executable, "-m", "qcholder", "eval", "--plan", str(plan_file),
                        "--grid", "3", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    line = json.loads(r.stdout.strip().splitlines()[-1])
    assert line["passed"] and line["backend"] in ("cython", "python")
