import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencilrange.errors import ConfigError, ExpressionError
from pencilrange.utils.expr import Expression, compile_expression, parse_coefficient

X = np.linspace(-2.0, 2.0, 9)
COEFFICIENTS = st.floats(min_value=-50, max_value=50, allow_nan=False)


@pytest.mark.parametrize(
    "source,expected",
    [
        ("x^2 + 1", X**2 + 1),
        ("2j*x", 2j * X),
        ("i*x - j", 1j * X - 1j),
        ("exp(-x^2)", np.exp(-(X**2))),
        ("sin(pi*x) + cos(x)", np.sin(np.pi * X) + np.cos(X)),
        ("abs(x) * sign(x)", X),
        ("re(x + 3j) + im(2*i*x)", X + 2 * X),
        ("sqrt(x)", np.emath.sqrt(X)),
        ("e", np.full_like(X, np.e)),
    ],
)
def test_expression_values(source, expected):
    """Test if expressions evaluate elementwise to complex arrays"""
    values = Expression(source)(X)

    assert values.dtype == np.complex128
    assert values.shape == X.shape
    assert np.allclose(values, expected)


def test_expression_step():
    """Test if step ramps linearly and jumps for equal endpoints"""
    ramp = Expression("step(-1, 1)")(X)
    jump = Expression("step(0, 0)")(X)

    assert np.allclose(ramp, np.clip((X + 1) / 2, 0, 1))
    assert np.allclose(jump, (X >= 0).astype(float))


def test_expression_sequence_variable():
    """Test if integer indices are evaluated as floats"""
    n = np.arange(1, 6)
    values = Expression("(-1)^n / n", variable="n")(n)

    assert np.allclose(values, (-1.0) ** n / n)


@pytest.mark.parametrize(
    "source",
    [
        "x +",
        "y * 2",
        "step(1)",
        "log(x)",
        "x.real",
        "[x]",
        "'x'",
        "__import__('os')",
        "exp(x=1)",
        "x if x else 1",
    ],
)
def test_expression_rejected(source):
    """Test if sources outside the grammar raise an ExpressionError naming the field"""
    with pytest.raises(ExpressionError) as excinfo:
        compile_expression(source, "x", "family.V")

    assert excinfo.value.field == "family.V"
    assert isinstance(excinfo.value, ConfigError)


def test_expression_evaluation_error():
    """Test if a call failing at evaluation time raises an ExpressionError"""
    with pytest.raises(ExpressionError):
        Expression("sign(x, x)")(X)


def test_expression_literal_power_overflow():
    """Test if a tower of literal powers overflows instead of running unbounded"""
    with pytest.raises(ExpressionError) as excinfo:
        Expression("9^9^9", path="family.V")(X)

    assert excinfo.value.field == "family.V"
    assert np.allclose(Expression("2^10")(X), 1024.0)


@pytest.mark.parametrize(
    "value,expected",
    [(2, 2), (1.5, 1.5), ([1, -2], 1 - 2j)],
)
def test_parse_coefficient_constants(value, expected):
    """Test if numbers and [re, im] pairs are constants"""
    assert parse_coefficient(value) == expected


@pytest.mark.parametrize("value", [True, [1, 2, 3], None, {"re": 1}])
def test_parse_coefficient_invalid(value):
    """Test if other values are rejected"""
    with pytest.raises(ExpressionError):
        parse_coefficient(value, field_name="family.V")


@given(COEFFICIENTS, COEFFICIENTS)
def test_expression_linear(a, b):
    """Test if a linear expression matches numpy arithmetic"""
    values = Expression(f"({a!r})*x + ({b!r})")(X)

    assert np.allclose(values, a * X + b)
