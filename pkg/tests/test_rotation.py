import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import cf_value, closest_return_denominators, exact_tiling_lengths
from siegelbounds.errors import DomainError, ParseError
from siegelbounds.rotation import (
    CombinatorialInterval,
    RotationNumber,
    Tail,
    comb_distance,
    convergents,
    diffeo_tiling,
    gaps,
    level_interval,
    parse_rotation,
    rotate,
    scale_interval,
    spread_around,
    truncated_value,
)

GOLDEN = RotationNumber.golden()
THETAS = [GOLDEN, RotationNumber((2,)), RotationNumber((1, 1000)), RotationNumber((1, 7)),
          RotationNumber((3, 1, 4))]

pretails = st.lists(st.integers(1, 6), max_size=4)


def test_golden_value():
    assert abs(GOLDEN.value - (math.sqrt(5) - 1) / 2) < 1e-16


@pytest.mark.parametrize("theta", THETAS, ids=str)
def test_value_matches_truncation(theta):
    assert abs(theta.value - float(truncated_value(theta, 60))) < 1e-14
    assert abs(theta.value - float(cf_value(theta.coefficients))) < 1e-14


def test_golden_convergents():
    assert convergents(GOLDEN, 4).q == [1, 2, 3, 5]
    assert convergents(GOLDEN, 4).convention_a1


@pytest.mark.parametrize("theta", THETAS, ids=str)
def test_q_are_closest_returns(theta):
    table = convergents(theta, 30)
    exact = cf_value(theta.coefficients)
    records = closest_return_denominators(exact, 10_000)
    assert [q for q in table.q if q <= 10_000] == records


@pytest.mark.parametrize("theta", THETAS, ids=str)
def test_table_invariants(theta):
    t = convergents(theta, 32)
    assert t[0].q == 1
    for m in range(1, 31):
        assert t[m].q < t[m + 1].q
        assert t[m].length > t[m + 1].length
        assert t[m].theta_m * t[m + 1].theta_m < 0
        assert 0.5 / t[m + 1].q < t[m].length < 1 / t[m + 1].q


def test_length_matches_exact():
    theta = RotationNumber((1, 7))
    exact = cf_value((1, 7), terms=120)
    for row in convergents(theta, 25):
        assert abs(row.theta_m - float(row.q * exact - row.p)) < 1e-15


def test_finite_tail_rejected():
    with pytest.raises(DomainError):
        convergents(RotationNumber((2, 3), Tail.FINITE), 3)
    with pytest.raises(DomainError):
        convergents(GOLDEN, 0)


def test_golden_from():
    assert GOLDEN.golden_from == 1
    assert RotationNumber((1, 1000)).golden_from == 3
    assert RotationNumber((2, 1, 1)).golden_from == 2


@pytest.mark.parametrize("text", ["[0;(1)*]", "[0;1,1000,(1)*]", "[0;2,3]", "[0;5,(1)*]"])
def test_parse_round_trip(text):
    assert str(parse_rotation(text)) == text


@pytest.mark.parametrize("text", ["0.5", "[1;2]", "[0;a,(1)*]", "[0;0,(1)*]", "[0;-2]", "[0;1]"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse_rotation(text)


def test_rotate_and_distance():
    assert rotate(0.25, 0.5) == 0.75
    assert abs(rotate(0.9, 0.2) - 0.1) < 1e-15
    assert comb_distance(0, 0.5) == 0.5
    assert abs(comb_distance(0.1, 0.9) - 0.2) < 1e-15
    assert comb_distance(0.3, 0.3) == 0


def test_iterated_rotation_is_closest_return():
    t = convergents(GOLDEN, 6)
    x0 = 0.123
    for m in range(5):
        x = x0
        for _ in range(t[m].q):
            x = rotate(x, GOLDEN.value)
        d = (x - x0 + 0.5) % 1.0 - 0.5
        assert abs(d - t[m].theta_m) < 1e-12


def test_scale_interval():
    I = CombinatorialInterval(0.0, 0.1)
    J = scale_interval(I, 3)
    assert abs(J.left - 0.9) < 1e-15 and abs(J.length - 0.3) < 1e-15
    assert scale_interval(I, 1) == I
    assert scale_interval(CombinatorialInterval(0.0, 0.3), 4).is_full_circle


def test_level_interval_length():
    with pytest.raises(DomainError):
        spread_around(CombinatorialInterval(0.0, 0.1), GOLDEN)
    I = level_interval(GOLDEN, 0.0, 0)
    assert abs(I.length - convergents(GOLDEN, 1)[0].length) < 1e-12


@pytest.mark.parametrize("theta", THETAS, ids=str)
@pytest.mark.parametrize("m", [0, 1, 3, 6])
def test_spread_around(theta, m):
    t = convergents(theta, m + 2)
    I = level_interval(theta, 0.37, m)
    spread = spread_around(I, theta)
    assert len(spread) == t[m + 1].q
    assert spread[0].left == I.left
    assert t[m + 1].q * t[m].length <= 1
    for gap in gaps(spread):
        assert gap > -1e-12
        assert abs(gap) < 1e-12 or abs(gap - t[m + 1].length) < 1e-12


def test_spread_golden_level0():
    assert len(spread_around(level_interval(GOLDEN, 0.0, 0), GOLDEN)) == 2


def test_tiling_golden():
    tiling = diffeo_tiling(GOLDEN, 0.0, 1)
    assert len(tiling.cells) == 3


@pytest.mark.parametrize("theta", THETAS, ids=str)
@pytest.mark.parametrize("m", [0, 2, 5, 9])
def test_tiling_matches_exact_orbit(theta, m):
    t = convergents(theta, m + 2)
    tiling = diffeo_tiling(theta, 0.25, m)
    exact = exact_tiling_lengths(cf_value(theta.coefficients, terms=120), Fraction(1, 4), t[m + 1].q)
    assert sorted(tiling.lengths) == pytest.approx(sorted(float(x) for x in exact), abs=1e-14)
    assert abs(sum(tiling.lengths) - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(pretails, st.floats(0, 1, exclude_max=True), st.integers(0, 8))
def test_tiling_two_lengths(coeffs, c, m):
    theta = RotationNumber(tuple(coeffs))
    t = convergents(theta, m + 2)
    tiling = diffeo_tiling(theta, c, m)
    assert len(tiling.cells) == t[m + 1].q
    short, long_ = t[m].length, t[m].length + t[m + 1].length
    for L in tiling.lengths:
        assert min(abs(L - short), abs(L - long_)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(pretails, st.integers(0, 25))
def test_alternating_returns(coeffs, m):
    t = convergents(RotationNumber(tuple(coeffs)), m + 2)
    assert t[m].theta_m * t[m + 1].theta_m < 0
