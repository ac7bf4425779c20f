import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from equidist.curve import (FourierCurve, evaluate_jet, genericity_check, inflexion_points,
                            load_curve, rotation_number, save_curve, signed_curvature)
from equidist.errors import InvalidInput, IrregularCurve

from conftest import circle, ellipse, fixture_curve, small_curve

coef = st.floats(-0.15, 0.15, allow_nan=False)
perturbation = st.lists(st.builds(complex, coef, coef), min_size=5, max_size=5)


def fd_derivative(curve, t, h=1e-4):
    return (curve(t + h) - curve(t - h)) / (2 * h)


def fd_second(curve, t, h=1e-4):
    return (curve(t + h) - 2 * curve(t) + curve(t - h)) / h ** 2


def test_circle_jet():
    jet = evaluate_jet(circle(), 0.0)
    assert np.allclose(jet.position, [1.0, 0.0])
    assert jet.kappa == pytest.approx(1.0, abs=1e-14)


def test_ellipse_curvature_at_vertex():
    assert signed_curvature(ellipse(), 0.0) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("t", [0.1, 0.9, 2.5, 4.0])
def test_ellipse_curvature_closed_form(t):
    a, b = 2.0, 1.0
    expected = a * b / (a * a * math.sin(t) ** 2 + b * b * math.cos(t) ** 2) ** 1.5
    assert signed_curvature(ellipse(a, b), t) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_circle_curvature_and_orientation(r):
    c = circle(r)
    assert signed_curvature(c, 1.3) == pytest.approx(1 / r)
    assert signed_curvature(c.reversed(), 1.3) == pytest.approx(-1 / r)


def test_jet_matches_finite_differences_on_fixture():
    c = fixture_curve("w1")
    t = 1.234
    jet = evaluate_jet(c, t)
    assert np.allclose(jet.d1, fd_derivative(c, t), rtol=1e-6)
    d1, d2 = fd_derivative(c, t), fd_second(c, t)
    kappa_fd = (d1[0] * d2[1] - d1[1] * d2[0]) / np.hypot(*d1) ** 3
    assert jet.kappa == pytest.approx(kappa_fd, rel=1e-6)


def test_from_complex_matches_direct_sum():
    terms = {1: 1.0, 2: 0.3 - 0.1j, -1: 0.05j, -3: 0.02}
    c = FourierCurve.from_complex(terms)
    t = np.linspace(0, 2 * math.pi, 17)
    z = sum(v * np.exp(1j * k * t) for k, v in terms.items())
    assert np.allclose(c(t), np.column_stack([z.real, z.imag]), atol=1e-14)


@given(perturbation, st.floats(0.0, 2 * math.pi))
def test_curvature_against_finite_differences(pert, t):
    c = small_curve(pert)
    d1, d2 = fd_derivative(c, t, 1e-4), fd_second(c, t, 1e-4)
    kappa_fd = (d1[0] * d2[1] - d1[1] * d2[0]) / np.hypot(*d1) ** 3
    assert signed_curvature(c, t) == pytest.approx(kappa_fd, rel=1e-5, abs=1e-6)


@given(perturbation)
def test_inflexion_count_is_even(pert):
    c = small_curve([3 * p for p in pert])
    assert len(inflexion_points(c)) % 2 == 0


@given(perturbation, st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(-2.0, 2.0))
def test_rotation_number_affine_invariant(pert, scale, shear, shift):
    c = small_curve(pert)
    m = np.array([[scale, shear], [0.0, 1.0 / scale]])
    assert rotation_number(c.transformed(m, (shift, -shift))) == rotation_number(c)


@given(perturbation, st.floats(0.0, 2 * math.pi))
def test_reversal_negates_curvature_and_rotation(pert, t):
    c = small_curve(pert)
    r = c.reversed()
    assert signed_curvature(r, -t) == pytest.approx(-signed_curvature(c, t), rel=1e-12, abs=1e-12)
    assert rotation_number(r) == -rotation_number(c)


@pytest.mark.parametrize("name,n", [("c2", 2), ("c3", 3), ("c4", 4), ("w1", 1)])
def test_rotation_numbers_of_fixtures(name, n):
    assert rotation_number(fixture_curve(name)) == n


def test_circle_rotation():
    assert rotation_number(circle()) == 1
    assert rotation_number(circle().reversed()) == -1


def test_inflexion_counts():
    assert inflexion_points(fixture_curve("perturbed_ellipse")) == []
    assert len(inflexion_points(fixture_curve("w1"))) == 2
    infl = inflexion_points(fixture_curve("eight_inflexions"))
    assert len(infl) == 8
    assert all(p.contact_order == 2 for p in infl)


def test_inflexions_are_curvature_zeros():
    c = fixture_curve("w1")
    for p in inflexion_points(c):
        assert abs(signed_curvature(c, p.t)) < 1e-8
        assert signed_curvature(c, p.t - 1e-4) * signed_curvature(c, p.t + 1e-4) < 0


def test_genericity():
    assert "CentrallySymmetricDegenerate" in genericity_check(circle()).flags
    assert genericity_check(FourierCurve([0, 2, 0.1], [0, 0, 0], [0, 0, 0], [0, 1, 0])).generic
    assert "DegenerateInflexion" in genericity_check(fixture_curve("degenerate_inflexion")).flags


def test_irregular_curve_rejected():
    with pytest.raises(IrregularCurve):
        # cusped cardioid-like curve: f'(0) = 0
        FourierCurve.from_complex({1: 1.0, 2: -0.5})


@pytest.mark.parametrize("doc", [[], {"xc": [0, 1]}, {"xc": "a", "xs": [], "yc": [], "ys": []}])
def test_bad_documents(doc):
    with pytest.raises(InvalidInput):
        FourierCurve.from_dict(doc)


def test_degree_cap():
    with pytest.raises(InvalidInput):
        FourierCurve(np.zeros(70), np.zeros(70), np.zeros(70), np.zeros(70))


def test_json_round_trip(tmp_path):
    c = fixture_curve("onshell_odd")
    p = tmp_path / "c.json"
    save_curve(c, p)
    back = load_curve(p)
    assert np.array_equal(back.xc, c.xc) and np.array_equal(back.ys, c.ys)
    assert json.loads(p.read_text())["xc"] == c.xc.tolist()


def test_unreadable_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InvalidInput):
        load_curve(p)
