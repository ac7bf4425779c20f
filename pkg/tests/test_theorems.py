import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fixture_curve, fixture_structure
from equidist.fixtures import FIXTURE_NAMES
from equidist.theorems import (
    VerificationReport,
    check_composition,
    check_random,
    curved_side,
    hausdorff,
    onshell_parity,
    singular_intervals,
    verify_fixture,
)
from equidist.equidistant import full_equidistant


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_checks_pass(name):
    report = verify_fixture(name)
    assert report.checks
    assert report.passed, report.summary()


def test_fixture_report_is_reproducible():
    a = verify_fixture("perturbed_ellipse").to_json()
    b = verify_fixture("perturbed_ellipse").to_json()
    assert a == b


def test_singular_intervals_different_sides():
    (a, b), (c, d) = singular_intervals(2.0, 3.0, "different")
    assert (a, b) == pytest.approx((2 / 3, 3 / 4))
    assert (c, d) == pytest.approx((1 / 4, 1 / 3))


def test_singular_interval_at_unit_ratio():
    (a, b), (c, d) = singular_intervals(1.0, 1.0, "different")
    assert a == b == c == d == pytest.approx(0.5)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_different_side_interval_ends_solve_ratio(r1, r2):
    lo, hi = sorted((r1, r2))
    for interval in singular_intervals(lo, hi, "different"):
        for lam in interval:
            ratio = lam / (1 - lam)
            assert min(abs(ratio - lo), abs(ratio - hi), abs(1 / ratio - lo), abs(1 / ratio - hi)) < 1e-9


@given(st.floats(1.1, 5.0), st.floats(1.1, 5.0))
def test_same_side_interval_ends_solve_ratio(r1, r2):
    lo, hi = sorted((r1, r2))
    for interval in singular_intervals(lo, hi, "same"):
        for lam in interval:
            ratio = lam / (lam - 1)
            assert min(abs(ratio - r) for r in (lo, hi, 1 / lo, 1 / hi)) < 1e-9


def test_same_side_straddling_one_is_unbounded():
    (a, b), (c, d) = singular_intervals(0.5, 2.0, "same")
    assert a == -math.inf and d == math.inf
    assert c == pytest.approx(2.0) and b == pytest.approx(-1.0)


def test_same_side_below_one_is_empty():
    assert singular_intervals(0.3, 0.8, "same") == ()


def test_two_arc_fixture_is_on_different_sides():
    fx_meta = __import__("equidist.fixtures", fromlist=["load_fixture"]).load_fixture("two_arc").meta
    c = fixture_curve("two_arc")
    for s, t in zip(fx_meta["F0"], fx_meta["F1"]):
        assert curved_side(c, s, t) == "different"


def test_hausdorff_oracle():
    a = np.array([[0.0, 0.0], [1.0, 0.0]])
    b = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])
    assert hausdorff(a, b) == 2.0
    assert hausdorff(b, a) == 2.0
    assert hausdorff(a, a[::-1]) == 0.0


def test_hausdorff_ignores_nan_rows():
    a = np.array([[0.0, 0.0], [np.nan, np.nan]])
    b = np.array([[3.0, 4.0]])
    assert hausdorff(a, b) == 5.0


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=20),
       st.tuples(st.floats(-1, 1), st.floats(-1, 1)))
def test_hausdorff_of_translate_bounded_by_shift(pts, shift):
    a = np.array(pts)
    b = a + np.array(shift)
    assert hausdorff(a, b) <= math.hypot(*shift) + 1e-12


def test_report_json_structure():
    r = VerificationReport()
    r.add("b/check", 1, 1, True)
    r.add("a/check", 2, np.float64(3.0), False, 0.5, note="x")
    r.skip("c/check", "why")
    d = json.loads(r.to_json())
    assert d["passed"] is False
    assert d["counts"] == {"pass": 1, "fail": 1, "skip": 1}
    assert [c["name"] for c in d["checks"]] == ["a/check", "b/check", "c/check"]
    assert d["checks"][0]["observed"] == 3.0 and d["checks"][0]["tolerance"] == 0.5
    assert [c.name for c in r.failures] == ["a/check"]
    assert "1 passed, 1 failed, 1 skipped" in r.summary()


def test_report_merge_order_does_not_matter():
    a, b = VerificationReport(), VerificationReport()
    a.add("x", 1, 1, True)
    b.add("y", 1, math.inf, True)
    left = VerificationReport().extend(a).extend(b).to_json()
    right = VerificationReport().extend(b).extend(a).to_json()
    assert left == right
    assert json.loads(left)["checks"][1]["observed"] == "inf"


def test_composition_with_half_inner_is_rejected():
    with pytest.raises(ValueError):
        check_composition(fixture_structure("perturbed_ellipse"), 0.5, 0.3)


def test_onshell_parity_w1():
    st_ = fixture_structure("w1")
    (shell,) = [b for b in full_equidistant(st_, 0.5) if not b.closed]
    info = onshell_parity(st_, shell)
    assert (info["cusps"] % 2 == 1) == info["odd_predicted"]
    assert info["inner_inflexions"] % 2 == 0


def test_random_curves_with_parities():
    report = check_random(100, 7)
    assert report.passed, report.summary()
    assert report.get("random/curves").observed == 100
