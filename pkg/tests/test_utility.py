import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamecoding.utility import (
    BinOp,
    Const,
    Func,
    Neg,
    Pow,
    UtilityDomainError,
    UtilitySyntaxError,
    Var,
    eval_grid,
    eval_utility,
    parse_utility,
    to_string,
    variables,
)


def test_parse_example1_dc():
    tree = parse_utility("-MSE + 25*PA")
    assert tree == BinOp("+", Neg(Var("MSE")), BinOp("*", Const(25.0), Var("PA")))


def test_parse_identity():
    assert parse_utility("PA") == Var("PA")


def test_parse_example1_ad():
    tree = parse_utility("log(MSE) + 0.75*log(PA)")
    assert tree == BinOp("+", Func("log", Var("MSE")), BinOp("*", Const(0.75), Func("log", Var("PA"))))


def test_power_operators_agree():
    assert parse_utility("PA^(1/3)") == parse_utility("PA**(1/3)")
    assert isinstance(parse_utility("MSE^2"), Pow)


@pytest.mark.parametrize("text", ["", "MSE +", "log(MSE", "foo(PA)", "X + 1", "PA^MSE", "2 PA", "MSE)"])
def test_syntax_errors(text):
    with pytest.raises(UtilitySyntaxError):
        parse_utility(text)


def test_eval_examples():
    assert eval_utility("-MSE + 25*PA", 10.07, 0.807) == pytest.approx(10.105, abs=1e-12)
    assert eval_utility("log(MSE) + 0.75*log(PA)", 1.0, 1.0) == 0.0
    assert eval_utility("PA / sqrt(MSE)", 6.52, 0.214) == pytest.approx(0.0838, abs=5e-5)


def test_eval_domain():
    with pytest.raises(UtilityDomainError):
        eval_utility("log(PA)", 1.0, 0.0)
    with pytest.raises(UtilityDomainError):
        eval_utility("1/MSE", 0.0, 0.5)
    with pytest.raises(ValueError):
        eval_utility("PA", -1.0, 0.5)
    with pytest.raises(ValueError):
        eval_utility("PA", 1.0, 1.5)


def test_eval_grid_marks_invalid():
    values, ok = eval_grid("log(PA) + MSE", [1.0, 2.0], [0.0, 0.5])
    assert not ok[0] and ok[1]
    assert math.isnan(values[0])
    assert values[1] == pytest.approx(math.log(0.5) + 2.0)


def test_variables():
    assert variables(parse_utility("log(MSE) + 3")) == {"MSE"}


_leaf = st.one_of(
    st.sampled_from([Var("MSE"), Var("PA")]),
    st.floats(0.01, 100, allow_nan=False).map(Const),
)


def _extend(children):
    return st.one_of(
        st.builds(Neg, children),
        st.builds(Func, st.sampled_from(["log", "sqrt"]), children),
        st.builds(BinOp, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(Pow, children, st.sampled_from([0.5, 2.0, 3.0, -1.0, 1 / 3])),
    )


@settings(max_examples=300, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=12))
def test_print_parse_round_trip(tree):
    text = to_string(tree)
    assert parse_utility(text) == tree
    assert to_string(parse_utility(text)) == text


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(0, 1))
def test_eval_deterministic(mse, pa):
    expr = parse_utility("MSE^2 * PA - 3*PA + MSE/(1 + PA)")
    assert eval_utility(expr, mse, pa) == eval_utility(expr, mse, pa)
    assert eval_utility(expr, mse, pa) == pytest.approx(mse**2 * pa - 3 * pa + mse / (1 + pa))
