import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibspectra import (
    EmptySetError, Interval, IntervalSet, covers_interval, gaps, hausdorff, hull, largest_gap,
    measure, minkowski_sum, normalize, square_image,
)
from fibspectra.intervals import minkowski_power

from oracles import grid_minkowski, random_set


def S(*rows):
    return IntervalSet([list(r) for r in rows])


# -- strategies ---------------------------------------------------------------

coord = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def raw_intervals(draw, max_size=6):
    pairs = draw(st.lists(st.tuples(coord, coord), max_size=max_size))
    return [(min(a, b), max(a, b)) for a, b in pairs]


@st.composite
def interval_sets(draw, min_size=0, max_size=6):
    raw = draw(raw_intervals(max_size))
    while len(raw) < min_size:
        x = draw(coord)
        raw.append((x, x))
    return normalize(raw)


# -- normalize --------------------------------------------------------------------

def test_normalize_examples():
    assert normalize([[0, 1], [0.5, 2]]) == S((0, 2))
    assert normalize([[3, 4], [0, 1]]) == S((0, 1), (3, 4))
    assert normalize([[0, 1], [1, 2]]) == S((0, 2))


def test_normalize_rejects_bad_input():
    with pytest.raises(ValueError):
        normalize([[1, 0]])
    with pytest.raises(ValueError):
        normalize([[0, math.inf]])
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_merge_tolerance_is_configurable():
    assert len(normalize([[0, 1], [1 + 1e-13, 2]])) == 1
    assert len(normalize([[0, 1], [1 + 1e-9, 2]])) == 2
    assert len(normalize([[0, 1], [1 + 1e-9, 2]], merge_tol=1e-8)) == 1


@given(raw_intervals())
def test_normalize_idempotent_and_sorted(raw):
    a = normalize(raw)
    assert normalize(a) == a
    arr = a.array
    assert np.all(arr[:, 0] <= arr[:, 1])
    assert np.all(arr[1:, 0] - arr[:-1, 1] > 0)


def test_json_round_trip():
    a = S((0.1, 0.30000000000000004), (1 / 3, 2 / 3))
    assert IntervalSet.from_json(a.to_json()) == a
    assert a.to_json() == {"intervals": [[0.1, 0.30000000000000004], [1 / 3, 2 / 3]]}


# -- Minkowski sums ---------------------------------------------------------------

def test_minkowski_examples():
    assert minkowski_sum(S((0, 1)), S((2, 3))) == S((2, 4))
    two = S((0, 1), (10, 11))
    assert minkowski_sum(two, two) == S((0, 2), (10, 12), (20, 22))
    assert not minkowski_sum(IntervalSet.empty(), S((0, 1)))


def test_minkowski_grid_oracle_small():
    two = S((0, 1), (10, 11))
    assert hausdorff(minkowski_sum(two, two), grid_minkowski(two, two, 1e-4)) <= 1e-9 + 2e-4


@given(interval_sets(1), interval_sets(1), interval_sets(1))
def test_minkowski_commutative_associative(a, b, c):
    ab = minkowski_sum(a, b)
    assert ab == minkowski_sum(b, a)
    left = minkowski_sum(ab, c)
    right = minkowski_sum(a, minkowski_sum(b, c))
    assert len(left) == len(right)
    assert np.allclose(left.array, right.array, rtol=1e-12, atol=1e-12)


@given(interval_sets(1), interval_sets(1))
def test_minkowski_hull_shape(a, b):
    h = hull(minkowski_sum(a, b))
    assert h == Interval(hull(a).lo + hull(b).lo, hull(a).hi + hull(b).hi)


def test_minkowski_random_grid_oracle():
    rng = np.random.default_rng(11)
    for _ in range(40):
        a, b = random_set(rng, 6), random_set(rng, 6)
        assert hausdorff(minkowski_sum(a, b), grid_minkowski(a, b, 1e-4)) <= 2e-4


def test_minkowski_power():
    a = S((0, 1), (10, 11))
    assert minkowski_power(a, 1) == a
    assert minkowski_power(a, 3) == minkowski_sum(minkowski_sum(a, a), a)
    with pytest.raises(ValueError):
        minkowski_power(a, 0)


# -- gaps, hull, measure --------------------------------------------------------------

def test_gaps_examples():
    assert gaps(S((0, 1), (2, 3))) == [Interval(1, 2)]
    assert gaps(S((0, 5))) == []
    assert gaps(S((0, 1 / 3), (2 / 3, 1))) == [Interval(1 / 3, 2 / 3)]
    with pytest.raises(EmptySetError, match="empty set has no hull"):
        gaps(IntervalSet.empty())


def test_hull_measure_largest_gap():
    assert hull(S((0, 1), (3, 4))) == Interval(0, 4)
    thirds2 = S((0, 1 / 9), (2 / 9, 1 / 3), (2 / 3, 7 / 9), (8 / 9, 1))
    assert measure(thirds2) == pytest.approx(4 / 9, abs=1e-15)
    assert largest_gap(S((0, 1), (3, 4))) == 2
    assert largest_gap(S((0, 1))) == 0
    assert measure(IntervalSet.empty()) == 0
    with pytest.raises(EmptySetError):
        hull(IntervalSet.empty())
    with pytest.raises(EmptySetError):
        largest_gap(IntervalSet.empty())


@given(interval_sets(), interval_sets())
def test_measure_subadditive(a, b):
    u = a | b
    assert measure(u) <= measure(a) + measure(b) + 1e-9
    if not (a & b) and len(u) == len(a) + len(b):
        assert measure(u) == pytest.approx(measure(a) + measure(b), abs=1e-9)


# -- square image ----------------------------------------------------------------------

def test_square_image_examples():
    assert square_image(S((0, 1), (2, 3))) == S((0, 1), (4, 9))
    assert square_image(S((1, 1))) == S((1, 1))
    assert square_image(S((0.5, 1.5))) == S((0.25, 2.25))
    with pytest.raises(ValueError):
        square_image(S((-1, 1)))


@given(interval_sets(1).map(lambda s: s.affine(1.0, 11.0)))
def test_square_image_preserves_count(a):
    b = square_image(a)
    assert len(b) == len(a)
    assert np.all(np.diff(b.lo) > 0)


# -- coverage and distances ------------------------------------------------------------

def test_covers_interval_examples():
    assert covers_interval(S((0, 10)), Interval(1, 9), 1e-9)
    assert not covers_interval(S((0, 4), (5, 10)), Interval(1, 9), 1e-9)
    assert covers_interval(S((0, 4), (4.0000001, 10)), Interval(1, 9), 1e-6)
    assert not covers_interval(S((2, 10)), Interval(1, 9), 1e-6)
    with pytest.raises(ValueError):
        covers_interval(S((0, 1)), Interval(0, 1), 0.0)


def test_covers_interval_gap_outside_target():
    assert covers_interval(S((0, 4), (5, 10)), Interval(5.5, 9), 1e-9)


def test_hausdorff():
    assert hausdorff(S((0, 1)), S((0, 1))) == 0
    assert hausdorff(S((0, 1)), S((0, 3))) == 2
    # a point in the middle of a gap of the other set
    assert hausdorff(S((0, 10)), S((0, 4), (6, 10))) == 1
    with pytest.raises(EmptySetError):
        hausdorff(IntervalSet.empty(), S((0, 1)))


def test_set_algebra():
    a = S((0, 2), (4, 6))
    b = S((1, 5))
    assert a & b == S((1, 2), (4, 5))
    assert a | b == S((0, 6))
    assert a.clip(1, 5) == S((1, 2), (4, 5))
    assert a.contains(S((0.5, 1), (4, 6)))
    assert not a.contains(S((1, 5)))
    assert a.contains(S((2, 2.1)), tol=0.2)


@settings(max_examples=50)
@given(interval_sets(1), st.floats(0.1, 10), st.floats(-5, 5))
def test_affine_scales_measure(a, scale, shift):
    assert measure(a.affine(scale, shift)) == pytest.approx(scale * measure(a), rel=1e-9, abs=1e-9)
