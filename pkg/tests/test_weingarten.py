import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weingarten_graphs.ambient import make_family
from weingarten_graphs.errors import OutOfRange, SchemaError
from weingarten_graphs.weingarten import (PairConfig, WeingartenSpec, builtin, check_ellipticity,
                                          elementary_symmetric, from_expression,
                                          homogeneity_degree, inverse_of, resolve_weingarten,
                                          weingarten_from_dict)

positive = st.floats(1e-2, 1e2)


def test_builtin_values():
    assert builtin("Hr", {"r": 2}, 3).evaluate([1, 2, 3]) == 11
    assert builtin("normA", n=3).evaluate([1, 2, 2]) == 3
    assert builtin("scalarWS", {"eps": 1}, 3).evaluate([1, 1, 1], 1.0) == 12


def test_builtin_metadata():
    for r in (1, 2, 3):
        w = builtin(f"Hr:{r}", n=3)
        assert w.degree == Fraction(r) and not w.depends_on_theta
    assert builtin("normA", n=3).degree == 1
    ws = builtin("WS", {"eps": -1}, 3)
    assert ws.depends_on_theta and ws.degree is None


def test_builtin_errors():
    with pytest.raises(OutOfRange):
        builtin("Hr", {"r": 4}, 3)
    with pytest.raises(OutOfRange):
        builtin("Hr", {"r": 0}, 3)
    with pytest.raises(SchemaError):
        builtin("nonsense", n=3)


def test_inverse_examples():
    assert inverse_of(builtin("Hr:1", n=2)).evaluate([1, 1]) == 0.5
    assert inverse_of(builtin("Hr:1", n=3)).evaluate([2, 2, 2]) == pytest.approx(2 / 3, rel=1e-15)
    with pytest.raises(OutOfRange):
        inverse_of(builtin("WS", n=3))
    with pytest.raises(OutOfRange):
        inverse_of(builtin("Hr:1", n=2)).evaluate([1, -1])


def test_inverse_of_norm_is_homogeneous_degree_one():
    assert homogeneity_degree(inverse_of(builtin("normA", n=3))) == 1


def test_homogeneity_degree():
    assert homogeneity_degree(builtin("Hr:2", n=3)) == 2
    assert homogeneity_degree(builtin("normA", n=3)) == 1
    assert homogeneity_degree(from_expression("e1 + e2", 3)) is None
    assert homogeneity_degree(from_expression("sqrt(e2)", 3)) == 1


@pytest.mark.parametrize("name", ["Hr:1", "Hr:2", "Hr:3", "normA", "WS"])
def test_permutation_invariance(name):
    w = builtin(name, {"eps": 1}, 3)
    rng = np.random.default_rng(5)
    for _ in range(100):
        k = rng.uniform(-3, 3, 3)
        t2 = rng.uniform(0, 1)
        ref = w.evaluate(k, t2)
        for p in itertools.permutations(k):
            assert w.evaluate(p, t2) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", ["Hr:1", "Hr:2", "Hr:3", "Hr:4", "normA", "WS"])
def test_analytic_gradient_matches_differences(name):
    w = builtin(name, {"eps": -1}, 4)
    numeric = WeingartenSpec(w.name, w.n, w.func, None)
    rng = np.random.default_rng(1)
    for k in np.exp(rng.uniform(-2, 2, (30, 4))):
        np.testing.assert_allclose(numeric.gradient(k, 0.5), w.gradient(k, 0.5), rtol=1e-6)


def test_ws_gradient_formula():
    w = builtin("WS", {"eps": 1}, 3)
    k = [0.5, 1.5, 4.0]
    np.testing.assert_allclose(w.gradient(k), [2 * (sum(k) - x) for x in k])


@settings(max_examples=50)
@given(st.lists(positive, min_size=3, max_size=3))
def test_double_inverse_is_identity(k):
    w = builtin("Hr:2", n=3)
    ww = inverse_of(inverse_of(w))
    assert ww.evaluate(k) == pytest.approx(w.evaluate(k), rel=1e-12)


@settings(max_examples=50)
@given(st.lists(positive, min_size=3, max_size=3), st.sampled_from([0.5, 2.0, 7.0]))
def test_homogeneity_invariant(k, t):
    for r in (1, 2, 3):
        w = builtin(f"Hr:{r}", n=3)
        assert w.evaluate([t * x for x in k]) == pytest.approx(t ** r * w.evaluate(k), rel=1e-9)


def test_elementary_symmetric_edges():
    assert elementary_symmetric([1, 2], 0) == 1.0
    assert elementary_symmetric([1, 2], 3) == 0.0


def test_ellipticity_examples():
    rep = check_ellipticity(builtin("Hr:3", n=3), samples=200, seed=3)
    assert rep.passed and rep.min_partial > 0
    rep = check_ellipticity(builtin("WS", {"eps": 1}, 3), samples=200, seed=3)
    assert rep.passed
    probe = WeingartenSpec("probe", 2, lambda k, t2: k[0] - k[1], lambda k, t2: [1.0, -1.0])
    rep = check_ellipticity(probe, samples=10, seed=0)
    assert not rep.passed and rep.violations and rep.min_partial == -1.0
    with pytest.raises(ValueError):
        check_ellipticity(probe, samples=0)


def test_ellipticity_is_deterministic():
    w = from_expression("e1 + sqrt(e2)", 3)
    a = check_ellipticity(w, samples=50, seed=11).to_dict()
    b = check_ellipticity(w, samples=50, seed=11).to_dict()
    assert a == b


def test_strict_positivity_flag():
    w = builtin("WS", {"eps": -1}, 3)
    assert check_ellipticity(w, samples=200, seed=0).passed
    assert not check_ellipticity(w, samples=200, seed=0, strict_positivity=True).passed


def test_expression_weingarten_and_documents(tmp_path):
    w = from_expression("e1 + theta2", 3)
    assert w.depends_on_theta and w.evaluate([1, 2, 3], 0.25) == 6.25
    doc = weingarten_from_dict({"name": "mix", "n": 3, "expr": "e2 / e1"})
    assert doc.evaluate([1, 1, 1]) == 1.0
    assert weingarten_from_dict({"n": 3, "expr": "Hr:2"}).evaluate([1, 2, 3]) == 11
    with pytest.raises(SchemaError):
        weingarten_from_dict({"expr": "e1"})
    p = tmp_path / "w.json"
    p.write_text('{"n": 3, "expr": "sumsq"}')
    assert resolve_weingarten(str(p), 3).evaluate([1, 2, 2]) == 9
    assert resolve_weingarten("H2", 3).evaluate([1, 2, 3]) == 11


def test_pair_arity_check():
    with pytest.raises(OutOfRange):
        PairConfig(1.0, builtin("Hr:1", n=4), make_family("spheres", 3, 1))
