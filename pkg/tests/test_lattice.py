import math

import pytest
from hypothesis import given, strategies as st

from gapsim.lattice import (
    BOTTOM,
    FALSE,
    TRUE,
    InconsistencyError,
    Interval,
    leq,
    negate,
    parse_interval,
    sup,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def intervals(draw):
    a = draw(unit)
    b = draw(unit)
    return Interval(min(a, b), max(a, b))


def test_constants():
    assert BOTTOM == Interval(0.0, 1.0)
    assert TRUE == Interval(1.0, 1.0)
    assert FALSE == Interval(0.0, 0.0)


def test_construction_clamps_and_validates():
    assert Interval(-0.0001, 1.5) == BOTTOM
    with pytest.raises(ValueError):
        Interval(0.6, 0.4)


def test_leq_examples():
    assert leq(Interval(0, 1), Interval(1, 1))  # bottom below everything
    assert not leq(Interval(1, 1), Interval(0, 0))  # top elements incomparable
    assert leq(Interval(0.2, 0.9), Interval(0.5, 0.7))  # containment


def test_sup_examples():
    assert sup([Interval(0, 1), Interval(0.5, 1)]) == Interval(0.5, 1)
    assert sup([Interval(0.2, 0.9), Interval(0.5, 1)]) == Interval(0.5, 0.9)
    with pytest.raises(InconsistencyError):
        sup([TRUE, FALSE])
    with pytest.raises(ValueError):
        sup([])


def test_negate_examples():
    assert negate(TRUE) == FALSE
    assert negate(BOTTOM) == BOTTOM
    assert negate(Interval(0.1, 1)) == Interval(0, 0.9)


def test_text_form():
    assert str(Interval(0.1, 1.0)) == "[0.1,1.0]"
    assert parse_interval("[0.1,1]") == Interval(0.1, 1.0)
    assert parse_interval(" [0,0] ") == FALSE
    with pytest.raises(ValueError):
        parse_interval("[0.5]")
    with pytest.raises(ValueError):
        parse_interval("[0,1.5]")


@given(intervals())
def test_bottom_below_everything(a):
    assert leq(BOTTOM, a)


@given(intervals(), intervals())
def test_sup_is_upper_bound(a, b):
    try:
        s = sup([a, b])
    except InconsistencyError:
        return
    assert leq(a, s) and leq(b, s)


@given(intervals(), intervals(), intervals())
def test_sup_commutative_associative_idempotent(a, b, c):
    try:
        left = sup([sup([a, b]), c])
        right = sup([a, sup([b, c])])
        comm = sup([b, a])
        flat = sup([a, b, c])
    except InconsistencyError:
        return
    assert left == right == flat
    assert comm == sup([a, b])
    assert sup([a, a]) == a


@given(intervals())
def test_negate_involution(a):
    back = negate(negate(a))
    assert math.isclose(back.lower, a.lower, abs_tol=1e-12)
    assert math.isclose(back.upper, a.upper, abs_tol=1e-12)


@given(intervals(), intervals(), intervals())
def test_leq_is_partial_order(a, b, c):
    assert leq(a, a)
    if leq(a, b) and leq(b, a):
        assert a == b
    if leq(a, b) and leq(b, c):
        assert leq(a, c)
