import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from consentify.extreal import NEG_INF, ExtendedReal, argmax, ext

finite = st.fractions(max_denominator=50).map(ExtendedReal)
extended = st.one_of(st.just(NEG_INF), finite)


def test_neg_inf_is_below_every_real():
    assert NEG_INF < ExtendedReal(-(10**30))
    assert NEG_INF < -(10**30)
    assert not NEG_INF.is_finite
    assert NEG_INF == ExtendedReal("-inf") == ExtendedReal(-math.inf)
    assert float(NEG_INF) == -math.inf


@pytest.mark.parametrize("bad", [math.inf, math.nan])
def test_other_non_finite_values_rejected(bad):
    with pytest.raises(ValueError):
        ExtendedReal(bad)


def test_values_are_exact():
    assert ExtendedReal("1/3").value == Fraction(1, 3)
    assert ExtendedReal(0.5) == Fraction(1, 2)
    assert str(ExtendedReal("2/4")) == "1/2"
    with pytest.raises(TypeError):
        ExtendedReal(True)


@given(extended, extended, extended)
def test_total_order(a, b, c):
    assert (a <= b) or (b <= a)
    if a <= b and b <= c:
        assert a <= c
    assert (a == b) == (hash(a) == hash(b)) or a != b


def test_argmax_mixed_and_all_neg_inf():
    winners, best = argmax([1, 2, 3, 4], lambda i: NEG_INF if i % 2 else ext(5))
    assert winners == [2, 4] and best == 5
    winners, best = argmax("abc", lambda _: NEG_INF)
    assert winners == list("abc") and best == NEG_INF
    with pytest.raises(ValueError):
        argmax([], lambda x: x)
