import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weingarten_graphs.errors import SchemaError
from weingarten_graphs.expr import compile_expression


def test_basic_arithmetic_and_functions():
    f = compile_expression("-2*coth(2*s) + const(3) - s**2 / pi", {"s"})
    s = 0.7
    expected = -2 / math.tanh(2 * s) + 3 - s * s / math.pi
    assert f(s=s) == pytest.approx(expected, rel=1e-15)
    assert f.names == {"s"}


def test_arrays_are_accepted():
    f = compile_expression("cot(s)", {"s"})
    s = np.array([0.3, 0.6])
    np.testing.assert_allclose(f(s=s), np.cos(s) / np.sin(s), rtol=1e-15)


@pytest.mark.parametrize("src", ["__import__('os')", "s.real", "lambda: 1", "foo(s)",
                                 "t + 1", "const(s)", "s if s else 1", "[s]", ""])
def test_rejects_unsupported_syntax(src):
    with pytest.raises(SchemaError):
        compile_expression(src, {"s"})


@given(st.floats(0.05, 3.0), st.floats(-5, 5))
def test_matches_python(s, a):
    f = compile_expression("a*tanh(s) + exp(-s) * sqrt(s)", {"s", "a"})
    assert f(s=s, a=a) == pytest.approx(a * math.tanh(s) + math.exp(-s) * math.sqrt(s),
                                        rel=1e-14, abs=1e-14)
