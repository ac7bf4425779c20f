import math

import numpy as np
import pytest

from conftest import circle, ellipse, fixture_curve, fixture_structure
from equidist.curve import inflexion_points
from equidist.equidistant import (
    C1_REGULAR_ENDPOINT,
    SINGULAR_ENDPOINT,
    BranchNode,
    branch_curvature,
    branch_polyline,
    branch_rotation_number,
    classify_onshell_endpoint,
    css_curve,
    curvature_ratio_limit,
    curvature_sign_changes,
    detect_cusps,
    full_equidistant,
    graph_frame_derivatives,
    trace_branch,
)
from equidist.errors import AtCusp
from equidist.gluing import LambdaClass, maximal_schemes
from equidist.parallelism import parallel_structure


class Graph:
    """Local curve x -> (x, x^3 + c x^4), enough for the endpoint classifier."""

    def __init__(self, c):
        self.c = c

    def derivative(self, x, order=0):
        c = self.c
        x = np.asarray(x, dtype=float)
        ys = (x ** 3 + c * x ** 4, 3 * x ** 2 + 4 * c * x ** 3, 6 * x + 12 * c * x ** 2,
              6 + 24 * c * x, 24 * c + 0 * x)
        xs = (x, 1 + 0 * x, 0 * x, 0 * x, 0 * x)
        return np.stack([xs[order], ys[order]], axis=-1)

    def __call__(self, x):
        return self.derivative(x, 0)


@pytest.mark.parametrize("lam", [0.1, 0.3, 0.45, 0.7, 0.9])
def test_circle_equidistant_is_a_circle(lam):
    (b,) = full_equidistant(circle(), lam)
    rad = abs(2 * lam - 1)
    assert np.max(np.abs(np.hypot(*b.points.T) - rad)) < 1e-8
    kap = np.abs(b.kappa_E[b.valid()])
    assert np.max(np.abs(kap - 1 / rad)) * rad < 1e-8
    assert b.cusps == [] and b.inflexions == []


def test_circle_curvature_value():
    (b,) = full_equidistant(circle(), 0.3)
    assert branch_curvature(b.node(5)) == pytest.approx(2.5, rel=1e-10)


def test_ellipse_equidistant_scales_the_ellipse():
    (b,) = full_equidistant(ellipse(2, 1), 0.3)
    x, y = b.points.T
    assert np.max(np.abs((x / 0.8) ** 2 + (y / 0.4) ** 2 - 1)) < 1e-9
    # vertex (0.8, 0) of the scaled ellipse has curvature a / b^2 = 0.8 / 0.16
    i = int(np.argmax(x))
    if abs(b.points[i, 1]) < 1e-12:
        assert branch_curvature(b.node(i)) == pytest.approx(5.0, rel=1e-8)
    node_curv = np.abs(b.kappa_E)
    assert np.max(node_curv) == pytest.approx(5.0, rel=1e-4)


@pytest.mark.parametrize("curve", [circle(), ellipse(2, 1), ellipse(1, 3)])
def test_wigner_caustic_of_symmetric_curve_is_a_point(curve):
    pts = np.concatenate([b.points for b in full_equidistant(curve, 0.5, singularities=False)])
    assert np.max(np.ptp(pts, axis=0)) < 1e-6


def test_node_positions_are_affine_combinations():
    st = fixture_structure("w1")
    c = st.curve
    for lam in (0.3, 0.5):
        for b in full_equidistant(st, lam, singularities=False):
            want = lam * c(b.s) + (1 - lam) * c(b.t)
            assert np.max(np.abs(want - b.points)) < 1e-12


def test_perturbed_ellipse_cusps():
    st = fixture_structure("perturbed_ellipse")
    (half,) = full_equidistant(st, 0.5)
    assert len(half.cusps) == 3
    for lam in (0.2, 0.3, 0.4, 0.45):
        assert sum(len(b.cusps) for b in full_equidistant(st, lam)) % 2 == 0


def test_cusps_satisfy_the_ratio_condition():
    st = fixture_structure("perturbed_ellipse")
    from equidist.curve import signed_curvature
    from equidist.parallelism import opposite_curvature

    for lam in (0.3, 0.5):
        for b in full_equidistant(st, lam):
            for cu in b.cusps:
                ka = signed_curvature(st.curve, cu.s)
                kb = opposite_curvature(st.curve, cu.s, cu.t)
                assert abs((1 - lam) * ka - lam * kb) < 1e-6 * (abs(ka) + abs(kb))
                want = lam * st.curve(cu.s) + (1 - lam) * st.curve(cu.t)
                assert np.allclose(cu.position, want, atol=1e-12)


def test_convex_rotation_numbers():
    st = fixture_structure("perturbed_ellipse")
    (half,) = full_equidistant(st, 0.5)
    (gen,) = full_equidistant(st, 0.3)
    assert abs(branch_rotation_number(half)) == 0.5
    assert abs(branch_rotation_number(gen)) == 1.0


@pytest.mark.parametrize("name,n", [("c2", 2), ("c3", 3)])
def test_rosette_generic_rotation(name, n):
    for b in full_equidistant(fixture_structure(name), 0.3, singularities=False):
        assert abs(branch_rotation_number(b)) == n


@pytest.mark.parametrize("name", ["w1", "eight_inflexions", "onshell_odd", "perturbed_ellipse"])
@pytest.mark.parametrize("lam", [0.3, 0.5])
def test_inflexions_agree_with_curvature_sign(name, lam):
    for b in full_equidistant(fixture_structure(name), lam):
        assert len(b.inflexions) == curvature_sign_changes(b)


def test_w1_inflexions():
    st = fixture_structure("w1")
    gen = full_equidistant(st, 0.3)
    assert sorted(len(b.inflexions) for b in gen) == [4, 6]
    half = full_equidistant(st, 0.5)
    shell = [b for b in half if not b.closed]
    assert len(shell) == 1 and len(shell[0].inflexions) % 2 == 0


def test_lambda_endpoints_return_curve():
    st = fixture_structure("w1")
    for lam in (0.0, 1.0):
        (b,) = full_equidistant(st, lam)
        assert np.allclose(b.points, st.curve(b.s))


def test_trace_branch_rejects_wrong_lambda_class():
    st = fixture_structure("perturbed_ellipse")
    (half,) = maximal_schemes(st, LambdaClass.HALF)
    with pytest.raises(ValueError):
        trace_branch(st, half, 0.3)


def test_branch_curvature_at_cusp_raises():
    node = BranchNode(0.0, 1.0, np.zeros(2), np.array([1.0, 0.0]), 1.0, 1.0, 0.5)
    with pytest.raises(AtCusp):
        branch_curvature(node)


def test_polyline_doubles_cusps():
    st = fixture_structure("perturbed_ellipse")
    (b,) = full_equidistant(st, 0.5)
    rows = branch_polyline(b)
    assert len(rows) == len(b.s) + 2 * len(b.cusps)
    flagged = [i for i, r in enumerate(rows) if r[5]]
    assert len(flagged) == 2 * len(b.cusps)
    for i in flagged[::2]:
        assert rows[i][:4] == rows[i + 1][:4]
        assert math.isinf(rows[i][4])
    # cusp rows sit between their neighbours in traversal order
    pts = np.array([r[2:4] for r in rows])
    assert np.max(np.hypot(*np.diff(pts, axis=0).T)) <= 1.01 * b.node_spacing


@pytest.mark.parametrize("c,want", [(1.0, -8 / 3), (-1.0, 8 / 3)])
def test_graph_endpoint_limit(c, want):
    g = Graph(c)
    f3, f4 = graph_frame_derivatives(g, 0.0)
    assert f3 == pytest.approx(6.0) and f4 == pytest.approx(24 * c)
    ec = classify_onshell_endpoint(g, 0.0, side=1)
    assert ec.closed_form == pytest.approx(want, rel=1e-12)
    assert ec.limit == pytest.approx(want, rel=1e-3)
    assert ec.kind == (SINGULAR_ENDPOINT if want > 0 else C1_REGULAR_ENDPOINT)
    flipped = classify_onshell_endpoint(g, 0.0, side=-1)
    assert flipped.kind != ec.kind


@pytest.mark.parametrize("c", [1.0, -0.5])
def test_graph_ratio_limit(c):
    assert curvature_ratio_limit(Graph(c), 0.0) == pytest.approx(-1.0, abs=1e-3)


@pytest.mark.parametrize("name", ["w1", "eight_inflexions", "onshell_odd"])
def test_ratio_limit_at_fixture_inflexions(name):
    c = fixture_curve(name)
    for p in inflexion_points(c):
        assert curvature_ratio_limit(c, p.t) == pytest.approx(-1.0, abs=1e-3)


def test_css_of_symmetric_curve_is_centre():
    for curve in (circle(), ellipse(2, 1)):
        css = css_curve(curve)
        assert css.degenerate and css.cusps == []
        pts = css.points[np.all(np.isfinite(css.points), axis=1)]
        assert np.max(np.abs(pts)) < 1e-8


def test_css_of_perturbed_ellipse():
    st = fixture_structure("perturbed_ellipse")
    css = css_curve(st)
    (half,) = full_equidistant(st, 0.5)
    n = len(css.cusps)
    assert n % 2 == 1 and n >= 3 and n >= len(half.cusps)


def test_css_points_lie_on_chords():
    st = fixture_structure("w1")
    css = css_curve(st)
    for br in css.branches:
        a, b, q = st.curve(br["s"]), st.curve(br["t"]), br["points"]
        ok = np.all(np.isfinite(q), axis=1)
        chord = b - a
        rel = q - a
        off = chord[:, 0] * rel[:, 1] - chord[:, 1] * rel[:, 0]
        assert np.max(np.abs(off[ok])) < 1e-8 * max(1.0, float(np.max(np.abs(q[ok]))))


def test_w1_css_endpoints_at_inflexions():
    st = fixture_structure("w1")
    css = css_curve(st)
    infl = [p.t for p in inflexion_points(st.curve)]
    assert len(css.endpoints) == 2
    for bi, n in css.endpoints:
        s = css.branches[bi]["s"][n]
        assert min(abs((s - x + math.pi) % (2 * math.pi) - math.pi) for x in infl) < 1e-8


def _tangent_crossings(b, phi):
    d1 = b.structure.curve.derivative(b.s, 1)
    ang = np.arctan2(d1[:, 1], d1[:, 0])
    sg = np.sign(np.sin(ang - phi))
    return int(np.sum(sg[:-1] * sg[1:] < 0))


def test_convex_direction_counts():
    st = fixture_structure("perturbed_ellipse")
    (half,) = full_equidistant(st, 0.5, singularities=False)
    (gen,) = full_equidistant(st, 0.3, singularities=False)
    rng = np.random.default_rng(3)
    for phi in rng.uniform(0.1, math.pi - 0.1, 64):
        assert _tangent_crossings(half, phi) == 1
        assert _tangent_crossings(gen, phi) == 2


def test_bitangent_point_lies_on_the_bitangent():
    st = fixture_structure("w1")
    c = st.curve
    lam = 0.3
    seen = 0
    for b in full_equidistant(st, lam, singularities=False):
        a, q = c(b.s), c(b.t)
        ta = c.derivative(b.s, 1)
        g = (q - a)[:, 0] * ta[:, 1] - (q - a)[:, 1] * ta[:, 0]
        for i in np.nonzero((g[:-1] * g[1:] < 0) & ~b.boundary[:-1] & ~b.boundary[1:])[0]:
            w = g[i] / (g[i] - g[i + 1])
            p = (1 - w) * b.points[i] + w * b.points[i + 1]
            base = (1 - w) * a[i] + w * a[i + 1]
            tan = (1 - w) * ta[i] + w * ta[i + 1]
            off = abs(tan[0] * (p - base)[1] - tan[1] * (p - base)[0]) / np.linalg.norm(tan)
            assert off < 10 * b.node_spacing ** 2 + 1e-9
            seen += 1
    assert seen >= 2


def test_detect_cusps_is_idempotent():
    st = fixture_structure("perturbed_ellipse")
    (b,) = full_equidistant(st, 0.5)
    first = [(c.s, c.t) for c in b.cusps]
    again = [(c.s, c.t) for c in detect_cusps(b)]
    assert first == again


def test_structure_and_curve_inputs_agree():
    c = fixture_curve("perturbed_ellipse")
    a = full_equidistant(c, 0.3)
    b = full_equidistant(parallel_structure(c), 0.3)
    assert len(a) == len(b)
    assert np.array_equal(a[0].points, b[0].points)
