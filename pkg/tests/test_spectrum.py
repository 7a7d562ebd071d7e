import math

import numpy as np
import pytest

from fibspectra import (
    Interval, IntervalSet, Model, Piece, SpectrumApproximant, approximant, band_set, hausdorff,
    measure, rayleigh_bound, rayleigh_quadrature, spectrum_in_t, square_image,
)
from fibspectra.intervals import contains_points
from fibspectra.spectrum import T_PARAM, fib, level_distances
from fibspectra.transfer import word_half_trace


def _sampling_oracle(m, n, s, rng, tol, square=False, samples=20000):
    """Membership by direct evaluation at points away from the computed edges."""
    x = np.sort(np.random.default_rng(0).uniform(rng.lo, rng.hi, samples))
    E = x * x if square else x
    inside = np.abs(word_half_trace(m, n, E)) <= 1
    edges = s.array.ravel()
    far = np.min(np.abs(x[:, None] - edges[None, :]), axis=1) > 4 * tol if len(s) else np.ones(x.shape, bool)
    return np.array_equal(inside[far], contains_points(s, x[far]))


def test_band_set_trivial_examples():
    free = Model.canonical(0.0)
    assert band_set(free, -1, Interval(0, 100)) == IntervalSet([[0, 100]])
    assert not band_set(free, -1, Interval(-10, -1e-6))
    assert band_set(free, 1, Interval(0, (2 * math.pi) ** 2)) == IntervalSet([[0, (2 * math.pi) ** 2]])


def test_free_approximant_gap_free():
    s = approximant(Model.canonical(0.0), 7, Interval(0, 400)).set
    assert s == IntervalSet([[0, 400]])
    t = spectrum_in_t(Model.canonical(0.0), 7, Interval(0.5, 20)).set
    assert t == IntervalSet([[0.5, 20]])


@pytest.mark.parametrize("lam,n", [(4.0, 8), (1.0, 10), (30.0, 6)])
def test_band_set_matches_sampling(lam, n):
    m = Model.canonical(lam)
    rng = Interval(0, 50)
    s = band_set(m, n, rng, 1e-9)
    assert _sampling_oracle(m, n, s, rng, 1e-9)


def test_general_piece_model_matches_sampling():
    m = Model(Piece(((0.4, 0.0), (0.6, 3.0))), Piece(((0.7, -1.0),)))
    rng = Interval(-2, 60)
    s = band_set(m, 7, rng, 1e-9)
    assert len(s) > 5
    assert _sampling_oracle(m, 7, s, rng, 1e-9)


def test_band_edges_have_small_residuals():
    m, n, tol = Model.canonical(4.0), 8, 1e-9
    s = band_set(m, n, Interval(0.0, 50.0), tol)
    edges = s.array.ravel()
    edges = edges[(edges > 1e-6) & (edges < 50 - 1e-6)]
    h = 1e-7
    x = word_half_trace(m, n, edges)
    dx = (word_half_trace(m, n, edges + h) - word_half_trace(m, n, edges - h)) / (2 * h)
    assert np.all(np.abs(np.abs(x) - 1) <= 10 * tol * np.abs(dx) + 1e-12)


def test_approximant_strong_coupling_has_gaps_and_shrinks():
    m = Model.canonical(30.0)
    rng = Interval(0.0, 24.0)
    s8 = approximant(m, 8, rng).set
    assert measure(s8) < 24 and len(s8) > 1
    ms = [measure(approximant(m, k, rng).set) for k in range(4, 11)]
    assert all(b < a for a, b in zip(ms, ms[1:]))


@pytest.mark.parametrize("lam,rng", [(1.0, Interval(0, 50)), (4.0, Interval(0, 50)),
                                     (30.0, Interval(0, 24))])
def test_nesting(lam, rng):
    m, tol = Model.canonical(lam), 1e-9
    sets = [approximant(m, k, rng, tol).set for k in range(2, 12)]
    for big, small in zip(sets, sets[1:]):
        assert big.contains(small, tol=2 * tol)


def test_lowest_band_witness():
    for lam in (0.0, 1.0, 4.0, 30.0, 100.0):
        m = Model.canonical(lam)
        for k in range(1, 13):
            assert approximant(m, k, Interval(0.0, 12.0)).set


def test_nonnegativity():
    tol = 1e-9
    for lam in (0.0, 1.0, 30.0):
        s = approximant(Model.canonical(lam), 9, Interval(-5.0, 24.0), tol).set
        assert not s.clip(-5.0, -tol)


def test_t_and_e_consistency():
    m = Model.canonical(1.0)
    tol_t = 1e-10
    st = spectrum_in_t(m, 9, Interval(5.0, 20.0), tol_t)
    se = approximant(m, 9, Interval(25.0, 400.0), 1e-9)
    # a t-error of tol_t is an E-error of 2 t tol_t <= 4e-9
    assert hausdorff(square_image(st.set), se.set) <= 10 * max(1e-9, 2 * 20.0 * tol_t)


def test_window_n15_pieces():
    m = Model.canonical(1.0)
    j = Interval(15 * math.pi + 0.3, 16 * math.pi - 0.3)
    s = spectrum_in_t(m, 10, Interval(15 * math.pi, 16 * math.pi)).set.intersect(j)
    t = np.linspace(j.lo, j.hi, 400001)
    inside = np.abs(word_half_trace(m, 10, t * t)) <= 1
    inside |= np.abs(word_half_trace(m, 11, t * t)) <= 1
    runs = np.count_nonzero(np.diff(inside.astype(int)) == 1) + int(inside[0])
    # recorded: three pieces, separated by gaps of about 2e-5
    assert len(s) == runs == 3


def test_thread_count_does_not_change_bands():
    # lambda = 10 sends some brackets through the extended-precision path
    m = Model.canonical(10.0)
    rng = Interval(0.0, 80.0)
    a = band_set(m, 9, rng, 1e-9, threads=1)
    b = band_set(m, 9, rng, 1e-9, threads=4)
    assert a == b


def test_strong_coupling_thin_bands_found():
    # at lambda = 50 bands are far below double-precision resolution of x_n
    m = Model.canonical(50.0)
    s = approximant(m, 10, Interval(0.0, 24.0), 1e-9).set
    assert len(s) >= 40
    assert s.clip(0.0, 12.0)


def test_spectrum_json_round_trip():
    spec = approximant(Model.canonical(2.0), 5, Interval(0.0, 30.0))
    back = SpectrumApproximant.from_json(spec.to_json())
    assert back.set == spec.set and back.model == spec.model and back.level == 5
    t = spectrum_in_t(Model.canonical(2.0), 5, Interval(1.0, 5.0))
    assert t.variable == T_PARAM and t.e_max == 25.0
    assert SpectrumApproximant.from_json(t.to_json()).range == Interval(1.0, 5.0)


def test_input_validation():
    m = Model.canonical(1.0)
    with pytest.raises(ValueError):
        approximant(m, 0, Interval(0, 10))
    with pytest.raises(ValueError):
        band_set(m, 3, Interval(0, 10), tol=0.0)
    with pytest.raises(ValueError):
        spectrum_in_t(m, 3, Interval(-1, 10))


def test_rayleigh():
    assert rayleigh_bound(1.0) == (12.0, 24.0)
    assert rayleigh_bound(2.0) == (3.0, 6.0)
    for l_a in (0.5, 1.0, 2.0):
        assert rayleigh_quadrature(l_a) == pytest.approx(12 / l_a ** 2, rel=1e-3)
    with pytest.raises(ValueError):
        rayleigh_bound(0.0)


def test_level_distances_shrink():
    d = level_distances(Model.canonical(4.0), [4, 6, 8, 10], Interval(0.0, 30.0))
    assert [k for k, _ in d] == [6, 8, 10]
    assert d[-1][1] < d[0][1]


def test_fib():
    assert [fib(n) for n in range(1, 8)] == [1, 1, 2, 3, 5, 8, 13]
