import csv
import json
import re

import numpy as np
import pytest
from click.testing import CliRunner

from equidist.cli import RunConfig, main
from equidist.errors import InvalidInput
from equidist.fixtures import build_documents


@pytest.fixture
def files(tmp_path):
    docs = build_documents()
    out = {}
    for name in ("circle", "ellipse", "perturbed_ellipse", "c2", "w1"):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(docs[name]))
        out[name] = p
    return out


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def test_circle_is_non_generic(files):
    assert run("compute", "--lambda", "0.5", files["circle"]).exit_code == 3


def test_c2_half_has_two_branches(files):
    r = run("compute", "--lambda", "0.5", files["c2"])
    assert r.exit_code == 0, r.output
    assert json.loads(r.output)["lambdas"][0]["branch_count"] == 2


def test_compute_writes_files(files, tmp_path):
    out = tmp_path / "out"
    r = run("compute", "--lambda", "0.3,0.5", "--out", out, files["perturbed_ellipse"])
    assert r.exit_code == 0, r.output
    summary = json.loads(r.output)
    cusps = [e["cusps"] for e in summary["lambdas"]]
    assert cusps[0] % 2 == 0 and cusps[1] % 2 == 1
    assert sorted(p.name for p in out.glob("*.svg")) == [
        "perturbed_ellipse_lam0.3.svg", "perturbed_ellipse_lam0.5.svg"]
    with open(out / "perturbed_ellipse_lam0.5_branch0.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ("s", "t", "x", "y", "kappa_E", "is_cusp", "is_inflexion")
    assert sum(r[5] == "1" or r[5].lower() == "true" for r in rows[1:]) == 2 * cusps[1]
    on_disk = json.loads((out / "perturbed_ellipse_summary.json").read_text())
    assert on_disk["lambdas"] == summary["lambdas"]


def test_csv_round_trips_floats(files, tmp_path):
    out = tmp_path / "o"
    run("compute", "--lambda", "0.3", "--format", "csv", "--out", out, files["perturbed_ellipse"])
    with open(out / "perturbed_ellipse_lam0.3_branch0.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    from equidist.curve import load_curve
    from equidist.equidistant import full_equidistant

    (b,) = full_equidistant(load_curve(files["perturbed_ellipse"]), 0.3)
    plain = [r for r in rows if r[5] == "0"]
    assert np.array_equal(np.array([[float(v) for v in r[2:4]] for r in plain]), b.points)
    assert list(out.glob("*.svg")) == []


def test_outputs_are_deterministic(files, tmp_path):
    for d in ("a", "b"):
        r = run("compute", "--lambda", "0.3,0.5", "--out", tmp_path / d, files["w1"])
        assert r.exit_code == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_svg_contains_everything(files, tmp_path):
    out = tmp_path / "svg"
    run("compute", "--lambda", "0.5", "--format", "svg", "--out", out, files["w1"])
    text = (out / "w1_lam0.5.svg").read_text()
    x0, y0, w, h = map(float, re.search(r'viewBox="([^"]+)"', text).group(1).split())
    pts = []
    for m in re.finditer(r'points="([^"]+)"', text):
        pts += [tuple(map(float, p.split(","))) for p in m.group(1).split()]
    pts = np.array(pts)
    assert np.all(pts[:, 0] >= x0) and np.all(pts[:, 0] <= x0 + w)
    assert np.all(pts[:, 1] >= y0) and np.all(pts[:, 1] <= y0 + h)
    span = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1]))
    assert pts[:, 0].min() - x0 == pytest.approx(0.05 * span, rel=1e-6)
    for cls in ("curve", "branch", "cusp"):
        assert f'class="{cls}"' in text


def test_branches_output(files):
    r = run("branches", "--lambda", "0.5", files["perturbed_ellipse"])
    assert r.exit_code == 0
    assert "p0-p1 / p1-p0" in r.output
    r = run("branches", "--lambda", "0.3", "--json", files["c2"])
    assert len(json.loads(r.output)["schemes"]["GENERIC"]) == 3


def test_css_of_symmetric_oval(files, tmp_path):
    r = run("css", "--out", tmp_path / "css", files["ellipse"])
    assert r.exit_code == 0, r.output
    data = json.loads(r.output)
    assert data["degenerate"] and np.allclose(data["centre"], 0.0, atol=1e-8)


def test_css_of_perturbed_ellipse(files):
    data = json.loads(run("css", files["perturbed_ellipse"]).output)
    assert not data["degenerate"] and data["cusps"] % 2 == 1


def test_css_endpoints_for_curve_with_inflexions(files):
    data = json.loads(run("css", files["w1"]).output)
    assert len(data["endpoints"]) == 2


@pytest.mark.parametrize("args", [
    ("--lambda", "1"),
    ("--lambda", "0"),
    ("--lambda", "abc"),
    ("--samples", "1000"),
    ("--samples", "128"),
    ("--format", "png"),
    ("--tol", "bogus=1"),
])
def test_invalid_options(files, args):
    assert run("compute", *args, files["perturbed_ellipse"]).exit_code == 2


def test_missing_file(tmp_path):
    assert run("compute", tmp_path / "none.json").exit_code == 2


def test_bad_document(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"xc": [0, 1]}')
    assert run("compute", p).exit_code == 2


def test_env_overrides(files):
    r = run("compute", files["c2"], env={"EQUIDIST_LAMBDA": "0.3"})
    assert json.loads(r.output)["lambdas"][0]["lambda"] == 0.3
    r = run("compute", files["c2"], env={"EQUIDIST_SAMPLES": "1000"})
    assert r.exit_code == 2


def test_verify_fixture(tmp_path):
    r = run("verify", "--fixture", "c3", "--out", tmp_path)
    assert r.exit_code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and any("c3/" in c["name"] for c in report["checks"])
    assert (tmp_path / "summary.txt").read_text().strip().endswith("0 failed, 0 skipped")


def test_verify_needs_a_target():
    assert run("verify").exit_code == 2
    assert run("verify", "--fixture", "nope").exit_code == 2


def test_verify_failure_exit(tmp_path):
    # an absurd curvature cut makes every branch node look extremal
    r = run("verify", "--fixture", "perturbed_ellipse", "--tol", "zero_curvature=100")
    assert r.exit_code != 0


def test_run_config_validation(tmp_path):
    with pytest.raises(InvalidInput):
        RunConfig("compute", tmp_path, (0.5,), 300, None, ("svg",), 0, {})
    RunConfig("verify", None, (1.0,), 4096, None, ("json",), 0, {})
