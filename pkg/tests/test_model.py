import pytest
from hypothesis import given, strategies as st

from odsim.model import (
    Binary, EvalError, Lit, Reg, Unary, eval_expr, expr_regs, wrap64,
)

i64 = st.integers(min_value=-(2**63), max_value=2**63 - 1)
anyint = st.integers(min_value=-(2**70), max_value=2**70)


@given(anyint)
def test_wrap64_range(v):
    w = wrap64(v)
    assert -(2**63) <= w < 2**63
    assert (w - v) % (2**64) == 0


@given(i64, i64)
def test_wrap_add_matches_modular(a, b):
    assert eval_expr(Binary("+", Lit(a), Lit(b)), {}) == wrap64(a + b)


@given(i64, i64)
def test_wrap_mul_matches_modular(a, b):
    assert eval_expr(Binary("*", Lit(a), Lit(b)), {}) == wrap64(a * b)


@given(i64, i64.filter(lambda b: b != 0))
def test_division_truncates_toward_zero(a, b):
    q = eval_expr(Binary("/", Lit(a), Lit(b)), {})
    r = eval_expr(Binary("%", Lit(a), Lit(b)), {})
    trunc = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        trunc = -trunc
    assert q == wrap64(trunc)
    # remainder carries the dividend's sign and reconstructs the dividend
    assert wrap64(q * b + r) == wrap64(a)
    if r != 0:
        assert (r > 0) == (a > 0)


def test_division_by_zero_raises():
    with pytest.raises(EvalError):
        eval_expr(Binary("/", Lit(1), Lit(0)), {})
    with pytest.raises(EvalError):
        eval_expr(Binary("%", Lit(1), Lit(0)), {})


def test_comparisons_yield_flags():
    assert eval_expr(Binary("<", Lit(1), Lit(2)), {}) == 1
    assert eval_expr(Binary(">=", Lit(1), Lit(2)), {}) == 0
    assert eval_expr(Unary("!", Lit(0)), {}) == 1
    assert eval_expr(Unary("!", Lit(7)), {}) == 0


def test_logic_short_circuits_past_faults():
    divzero = Binary("/", Lit(1), Lit(0))
    assert eval_expr(Binary("&&", Lit(0), divzero), {}) == 0
    assert eval_expr(Binary("||", Lit(1), divzero), {}) == 1


def test_registers_default_to_zero():
    assert eval_expr(Reg("missing"), {}) == 0
    assert eval_expr(Binary("+", Reg("a"), Lit(3)), {"a": 4}) == 7


def test_expr_regs_collects_names():
    e = Binary("+", Reg("a"), Unary("-", Binary("*", Reg("b"), Lit(2))))
    assert expr_regs(e) == {"a", "b"}
