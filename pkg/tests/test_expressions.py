import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundleflow.errors import EvalDomainError, ExprSyntaxError
from bundleflow.expressions import (
    BinOp,
    Call,
    Const,
    Neg,
    Pow,
    ScalarField,
    Var,
    evaluate,
    parse,
    pretty,
)


def test_parse_catalog_components():
    assert ScalarField.parse("exp(2*x1)", 2)((0.0, 0.0)) == pytest.approx(1.0)
    assert ScalarField.parse("1", 2)((3.0, 4.0)) == 1.0
    assert ScalarField.parse("x2/x1", 2)((2.0, 6.0)) == pytest.approx(3.0)


def test_eval_examples():
    assert evaluate(parse("exp(2*x1)", 2), (0.0, 0.0)) == pytest.approx(1.0)
    assert evaluate(parse("exp(x2 - x1)", 2), (1.0, 1.0)) == pytest.approx(1.0)
    assert evaluate(parse("x2/x1", 2), (2.0, 6.0)) == pytest.approx(3.0)


def test_aliases():
    assert evaluate(parse("x + 2*y", 2), (1.0, 3.0)) == pytest.approx(7.0)
    assert evaluate(parse("1/(t + 1)", 1), (1.0,)) == pytest.approx(0.5)


def test_precedence_and_associativity():
    assert evaluate(parse("2 + 3*4", 1), (0.0,)) == 14.0
    assert evaluate(parse("2*3^2", 1), (0.0,)) == 18.0  # ^ binds tighter than *
    assert evaluate(parse("-2^2", 1), (0.0,)) == -4.0  # ^ binds tighter than unary -
    assert evaluate(parse("8 - 4 - 2", 1), (0.0,)) == 2.0  # left associative
    assert evaluate(parse("8/4/2", 1), (0.0,)) == 1.0


def test_integer_exponent_forms():
    assert evaluate(parse("x1^2", 1), (3.0,)) == 9.0
    assert evaluate(parse("x1^(-2)", 1), (2.0,)) == 0.25
    assert evaluate(parse("x1^-2", 1), (2.0,)) == 0.25
    with pytest.raises(ExprSyntaxError):
        parse("x1^0.5", 1)
    with pytest.raises(ExprSyntaxError):
        parse("x1^x1", 1)


def test_syntax_error_offsets():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x1 + @", 2)
    assert err.value.offset == 5
    with pytest.raises(ExprSyntaxError) as err:
        parse("x1 + ", 2)
    assert err.value.offset == 5
    with pytest.raises(ExprSyntaxError):
        parse("(x1 + 1", 2)
    with pytest.raises(ExprSyntaxError):
        parse("", 2)
    with pytest.raises(ExprSyntaxError):
        parse("   ", 2)


def test_unknown_identifiers():
    with pytest.raises(ExprSyntaxError):
        parse("z1", 2)
    with pytest.raises(ExprSyntaxError):
        parse("x3", 2)  # out of range for dim 2
    with pytest.raises(ExprSyntaxError):
        parse("tan(x1)", 2)
    # fine in a larger chart
    assert evaluate(parse("x3", 4), (0.0, 0.0, 5.0, 0.0)) == 5.0


def test_domain_errors_are_reported():
    with pytest.raises(EvalDomainError):
        evaluate(parse("ln(x1)", 1), (-1.0,))
    with pytest.raises(EvalDomainError):
        evaluate(parse("ln(x1)", 1), (0.0,))
    with pytest.raises(EvalDomainError):
        evaluate(parse("sqrt(x1)", 1), (-4.0,))
    with pytest.raises(EvalDomainError):
        evaluate(parse("1/x1", 1), (0.0,))
    with pytest.raises(EvalDomainError):
        evaluate(parse("x1^(-1)", 1), (0.0,))
    with pytest.raises(EvalDomainError):
        evaluate(parse("exp(x1)", 1), (1e5,))


def test_constant_folding():
    f = ScalarField.parse("exp(1) + 2^3", 2)
    assert f.const_value == pytest.approx(math.e + 8.0)
    assert ScalarField.parse("x1", 2).const_value is None


# -- round trip and reference-evaluator properties ----------------------------

_DIM = 3


def _ast_strategy():
    leaves = st.one_of(
        st.builds(Const, st.floats(-3.0, 3.0, allow_nan=False).map(float)),
        st.builds(Var, st.integers(0, _DIM - 1)),
    )

    def extend(children):
        return st.one_of(
            st.builds(Neg, children),
            st.builds(BinOp, st.sampled_from("+-*/"), children, children),
            st.builds(Pow, children, st.integers(-3, 3)),
            st.builds(Call, st.sampled_from(("exp", "ln", "sin", "cos", "sqrt")), children),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_ast_strategy())
def test_pretty_parse_pretty_is_fixed_point(ast):
    text = pretty(ast)
    reparsed = parse(text, _DIM)
    assert pretty(reparsed) == text


def _reference_eval(text: str, point) -> float:
    # independent evaluator: Python's own parser and math library
    source = text.replace("^", "**").replace("ln(", "log(")
    namespace = {
        "log": math.log,
        "exp": math.exp,
        "sin": math.sin,
        "cos": math.cos,
        "sqrt": math.sqrt,
        "__builtins__": {},
    }
    namespace.update({f"x{i + 1}": float(point[i]) for i in range(len(point))})
    return float(eval(source, namespace))  # noqa: S307 - test oracle


@settings(max_examples=200, deadline=None)
@given(_ast_strategy(), st.lists(st.floats(-2.0, 2.0, allow_nan=False), min_size=_DIM, max_size=_DIM))
def test_eval_matches_reference(ast, point):
    text = pretty(ast)
    try:
        ours = evaluate(parse(text, _DIM), point)
    except EvalDomainError:
        with pytest.raises((ValueError, ZeroDivisionError, OverflowError)):
            _reference_eval(text, point)
        return
    theirs = _reference_eval(text, point)
    if math.isinf(ours) or math.isinf(theirs):
        assert ours == theirs
        return
    assert abs(ours - theirs) <= 1e-15 * max(1.0, abs(ours), abs(theirs))


def test_scalar_field_is_reusable_and_immutable():
    f = ScalarField.parse("sin(x1)*cos(x2)", 2)
    pts = np.array([[0.1, 0.2], [1.0, -1.0]])
    vals = [f(p) for p in pts]
    assert vals == [f(p) for p in pts]
