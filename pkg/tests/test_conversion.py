from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zoomfool.zoom import ConversionParams, ZoomLevel, conv_n_to_t, conv_t_to_n


def exact_round_half_up_tenths(num, den):
    """Independent Eq.-1 oracle: N/rho in exact rationals, tenths rounded half away from zero."""
    tenths = Fraction(num * 10, den)
    floor = tenths.numerator // tenths.denominator
    rem = tenths - floor
    return (floor + (1 if rem >= Fraction(1, 2) else 0)) / 10


def test_known_cases():
    p60 = ConversionParams(60)
    assert conv_n_to_t(0, p60) == 0.0
    assert conv_n_to_t(93, p60) == 1.6  # 1.55 rounds up
    assert conv_n_to_t(90, p60) == 1.5
    assert conv_t_to_n(0.0, p60) == 0
    assert conv_t_to_n(1.5, p60) == 90
    assert conv_t_to_n(0.7, p60) == 42
    assert conv_n_to_t(42, p60) == 0.7


@settings(deadline=None)
@given(n=st.integers(min_value=0, max_value=10000), rho=st.integers(min_value=1, max_value=500))
def test_matches_exact_rational_oracle(n, rho):
    assert conv_n_to_t(n, ConversionParams(rho)) == exact_round_half_up_tenths(n, rho)


@settings(deadline=None)
@given(
    n1=st.integers(min_value=0, max_value=5000),
    n2=st.integers(min_value=0, max_value=5000),
    rho=st.integers(min_value=1, max_value=300),
)
def test_monotone_in_n(n1, n2, rho):
    lo, hi = sorted((n1, n2))
    p = ConversionParams(rho)
    assert conv_n_to_t(lo, p) <= conv_n_to_t(hi, p)


@pytest.mark.parametrize("rho", [10, 30, 60, 100])
def test_round_trip_all_one_decimal_factors(rho):
    p = ConversionParams(rho)
    for tenths in range(5, 55):
        t = tenths / 10
        assert conv_n_to_t(conv_t_to_n(t, p), p) == t


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ConversionParams(0)
    with pytest.raises(ValueError):
        ConversionParams(-3)
    p = ConversionParams(60)
    with pytest.raises(ValueError):
        conv_n_to_t(-1, p)
    with pytest.raises(ValueError):
        conv_t_to_n(-0.5, p)
    with pytest.raises(ValueError):
        conv_t_to_n(1.55, p)  # more than one decimal place


def test_zoom_level_validation():
    assert ZoomLevel.digital(0).n == 0
    assert ZoomLevel.physical(1.5).t == 1.5
    with pytest.raises(ValueError):
        ZoomLevel.digital(-1)
    with pytest.raises(ValueError):
        ZoomLevel.physical(0.4)
    with pytest.raises(ValueError):
        ZoomLevel.physical(5.5)
    with pytest.raises(ValueError):
        ZoomLevel.physical(1.25)
    assert ZoomLevel.digital(6) < ZoomLevel.digital(12)
    level = ZoomLevel.physical(2.3)
    assert ZoomLevel.from_json(level.to_json()) == level
