import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfound.radicals import DomainError, RadicalSyntaxError, evaluate, parse_radical


def test_golden_companion():
    with mpmath.workdps(50):
        want = mpmath.sqrt(2 * (5 + mpmath.sqrt(5))) / 4
        assert abs(evaluate("sqrt(2(5+sqrt(5)))/4") - want) < mpmath.mpf(10) ** -40
    assert float(parse_radical("sqrt(2(5+sqrt(5)))/4")) == pytest.approx(0.9510565162951535)


def test_plain_number():
    assert evaluate("1") == 1
    assert evaluate("2.5e1") == 25


def test_negative_root():
    with pytest.raises(DomainError):
        evaluate("sqrt(-1)")
    with pytest.raises(DomainError):
        evaluate("sqrt(2 - 3)")


@pytest.mark.parametrize("text,value", [
    ("1+2*3", 7),
    ("-2*3", -6),
    ("-sqrt(4)", -2),
    ("8sqrt(4)", 16),
    ("2(1+1)", 4),
    ("12/4/3", 1),
    ("1-2-3", -4),
    ("√9 × 2 − 1", 5),
])
def test_precedence(text, value):
    assert evaluate(text) == value


@pytest.mark.parametrize("text", ["", "   ", "1 2", "(1+2", "sqrt", "1+", "3 $ 4", "1/0*"])
def test_syntax_errors(text):
    with pytest.raises(RadicalSyntaxError):
        parse_radical(text)


def test_error_reports_position():
    with pytest.raises(RadicalSyntaxError) as info:
        parse_radical("1 + (2 * ")
    assert info.value.pos >= 0


def test_precision_at_least_thirty_digits():
    v = evaluate("sqrt(2)")
    with mpmath.workdps(60):
        assert abs(v * v - 2) < mpmath.mpf(10) ** -30


small = st.integers(min_value=0, max_value=50)


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return str(draw(small))
    kind = draw(st.sampled_from(["+", "-", "*", "sqrt", "neg"]))
    if kind == "sqrt":
        return f"sqrt({draw(small)})"
    if kind == "neg":
        return f"-({draw(expressions(depth=depth - 1))})"
    return f"({draw(expressions(depth=depth - 1))}){kind}({draw(expressions(depth=depth - 1))})"


@given(expressions())
def test_round_trip_print(text):
    e = parse_radical(text)
    again = parse_radical(e.to_text())
    assert abs(e.value() - again.value()) <= mpmath.mpf(10) ** -40 * (1 + abs(e.value()))
