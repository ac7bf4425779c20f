import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from equidist.errors import EquidistError
from equidist.fixtures import random_curve
from equidist.gluing import (LambdaClass, canonical, expected_arc_total, is_maximal, lambda_class,
                             maximal_schemes, predict, prolong, scheme_from_pairs)
from equidist.parallelism import parallel_structure

from conftest import fixture_structure


def test_lambda_class():
    assert lambda_class(0.5) is LambdaClass.HALF
    assert lambda_class(0.3) is LambdaClass.GENERIC
    assert lambda_class(0.5000001) is LambdaClass.GENERIC
    with pytest.raises(ValueError):
        lambda_class(1.0)


def test_convex_schemes():
    s = fixture_structure("perturbed_ellipse")
    (half,) = maximal_schemes(s, "HALF")
    (gen,) = maximal_schemes(s, "GENERIC")
    assert half.notation() == "p0-p1 / p1-p0"
    assert gen.notation() == "p0-p1-p0 / p1-p0-p1"


def test_convex_prolongation():
    s = fixture_structure("perturbed_ellipse")
    half = scheme_from_pairs(s, [(0, 1), (1, 0)], LambdaClass.HALF)
    assert is_maximal(half, s)
    gen = scheme_from_pairs(s, [(0, 1), (1, 0)], LambdaClass.GENERIC)
    assert not is_maximal(gen, s)
    full = prolong(gen, s)
    assert is_maximal(full, s)
    assert full.notation() == "p0-p1-p0 / p1-p0-p1"
    with pytest.raises(ValueError):
        prolong(full, s)


@pytest.mark.parametrize("name,n", [("c2", 2), ("c3", 3), ("c4", 4)])
def test_rosette_scheme_counts(name, n):
    s = fixture_structure(name)
    assert len(maximal_schemes(s, "HALF")) == n
    assert len(maximal_schemes(s, "GENERIC")) == 2 * n - 1


def test_w1_profile():
    s = fixture_structure("w1")
    half = maximal_schemes(s, "HALF")
    gen = maximal_schemes(s, "GENERIC")
    assert len(half) == 2 and len(gen) == 2
    assert sum(len(x) for x in gen) == expected_arc_total(s, LambdaClass.GENERIC) == 14
    onshell = [x for x in half if x.on_shell]
    assert len(onshell) == 1
    pr = predict(onshell[0], s)
    assert pr.inflexions == 2 and pr.cusp_parity is None
    assert sorted(predict(x, s).inflexions for x in gen) == [4, 6]


@pytest.mark.parametrize("name", ["perturbed_ellipse", "c2", "c3", "w1", "onshell_odd", "eight_inflexions"])
@pytest.mark.parametrize("kind", ["HALF", "GENERIC"])
def test_arc_accounting(name, kind):
    s = fixture_structure(name)
    schemes = maximal_schemes(s, kind)
    assert sum(len(x) for x in schemes) == expected_arc_total(s, LambdaClass(kind))


@pytest.mark.parametrize("name", ["c3", "w1", "eight_inflexions"])
@pytest.mark.parametrize("kind", ["HALF", "GENERIC"])
def test_chains_are_disjoint(name, kind):
    s = fixture_structure(name)
    kind = LambdaClass(kind)
    for sc in maximal_schemes(s, kind):
        if not sc.closed:
            continue
        for i in range(len(sc.pairs) - 1):
            part = scheme_from_pairs(s, [sc.pairs[i], sc.pairs[i + 1]], kind)
            while not is_maximal(part, s):
                part = prolong(part, s)
            assert canonical(s, part).pairs == sc.pairs


def test_onshell_half_schemes_match_inflexions():
    for name in ("w1", "onshell_odd", "eight_inflexions"):
        s = fixture_structure(name)
        extrema = [p.index for p in s.points if p.is_extremum]
        onshell = [x for x in maximal_schemes(s, "HALF") if x.on_shell]
        assert len(onshell) == len(extrema) // 2
        ends = sorted(e for x in onshell for e in (x.pairs[0][0], x.pairs[-1][0]))
        assert ends == sorted(extrema)


def _swap_reverse_is_rotation(pairs):
    cycle = list(pairs[:-1])
    mirrored = [(l, k) for k, l in reversed(cycle)]
    return any(mirrored == cycle[r:] + cycle[:r] for r in range(len(cycle)))


def test_onshell_generic_schemes_are_mirror_symmetric():
    for name in ("w1", "eight_inflexions"):
        s = fixture_structure(name)
        onshell = [x for x in maximal_schemes(s, "GENERIC") if x.on_shell]
        assert onshell
        for sc in onshell:
            assert _swap_reverse_is_rotation(sc.pairs)


def test_rosette_cusp_parity_predictions():
    c3 = [predict(x, fixture_structure("c3")).cusp_parity for x in maximal_schemes(fixture_structure("c3"), "HALF")]
    c2 = [predict(x, fixture_structure("c2")).cusp_parity for x in maximal_schemes(fixture_structure("c2"), "HALF")]
    assert c3.count("odd") == 1
    assert c2.count("odd") == 0


def test_convex_half_prediction():
    s = fixture_structure("perturbed_ellipse")
    pr = predict(maximal_schemes(s, "HALF")[0], s)
    assert pr.cusp_parity == "odd" and pr.inflexions == 0 and pr.rotation_class == "half-integer"


def test_schemes_are_canonical_and_sorted():
    s = fixture_structure("eight_inflexions")
    for kind in ("HALF", "GENERIC"):
        schemes = maximal_schemes(s, kind)
        assert all(canonical(s, x) == x for x in schemes)
        assert schemes == sorted(schemes, key=lambda x: (len(x.pairs), x.pairs))


@settings(max_examples=8)
@given(st.integers(0, 2 ** 32 - 1))
def test_arc_accounting_random(seed):
    import numpy as np
    curve = random_curve(np.random.default_rng(seed))
    try:
        s = parallel_structure(curve)
        for kind in ("HALF", "GENERIC"):
            schemes = maximal_schemes(s, kind)
            assert sum(len(x) for x in schemes) == expected_arc_total(s, LambdaClass(kind))
    except EquidistError:
        assume(False)
