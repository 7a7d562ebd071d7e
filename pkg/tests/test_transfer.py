import math

import numpy as np
import pytest

from fibspectra import (
    Model, Piece, constant_piece_matrix, fibonacci_word, fricke_vogt, initial_traces, invariant,
    invariant_closed_form, log_derivative_invariant, piece_matrix, word_matrix,
)
from fibspectra.transfer import half_trace, scaled_word_traces, word_half_trace


def test_constant_piece_examples():
    m = constant_piece_matrix(0.0, 1.0, math.pi ** 2)
    assert np.allclose(m, [[-1, 0], [0, -1]], atol=1e-12)
    assert half_trace(m) == pytest.approx(-1)
    assert np.allclose(constant_piece_matrix(0.0, 1.0, 0.0), [[1, 1], [0, 1]])
    h = constant_piece_matrix(1.0, 1.0, 0.0)
    assert np.allclose(h, [[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]])
    assert np.linalg.det(h) == pytest.approx(1, abs=1e-12)


def test_unimodular_over_range():
    E = np.linspace(-50, 200, 801)
    for lam in (0.0, 1.0, 7.5, 50.0):
        ma, mb = (constant_piece_matrix(v, 1.0, E) for v in (0.0, lam))
        for m in (ma, mb, mb @ ma):
            det = np.linalg.det(m)
            scale = np.max(np.abs(m), axis=(-2, -1)) ** 2
            assert np.all(np.abs(det - 1) <= 1e-10 * scale)


def test_series_branch_is_smooth():
    # values on both sides of E = v and at it agree with a smooth interpolation
    E = 2.0 + np.array([-2e-6, -5e-7, 0.0, 5e-7, 2e-6])
    m = constant_piece_matrix(2.0, 1.3, E)
    for i, j in ((0, 0), (0, 1), (1, 0)):
        y = m[:, i, j]
        fit = np.polyval(np.polyfit(E - 2.0, y, 2), E - 2.0)
        assert np.allclose(y, fit, atol=1e-13)


def test_piece_matrix_concatenation():
    E = 2.0
    single = Piece.constant(0.0)
    assert np.allclose(piece_matrix(single, E), constant_piece_matrix(0.0, 1.0, E))
    split = Piece(((1.0, 0.0), (1.0, 0.0)))
    assert np.allclose(piece_matrix(split, E), constant_piece_matrix(0.0, 2.0, E), atol=1e-12)
    m = Model.canonical(1.0)
    ab = word_matrix(m, "ab", E)
    assert np.allclose(ab, piece_matrix(m.piece_b, E) @ piece_matrix(m.piece_a, E))


def test_segment_split_invariance():
    rng = np.random.default_rng(7)
    E = np.linspace(-5, 60, 41)
    for _ in range(10):
        l, v, f = rng.uniform(0.2, 2), rng.uniform(-3, 3), rng.uniform(0.1, 0.9)
        whole = piece_matrix(Piece(((l, v),)), E)
        halves = piece_matrix(Piece(((f * l, v), ((1 - f) * l, v))), E)
        assert np.allclose(whole, halves, rtol=1e-12, atol=1e-12)


def test_model_validation_and_json():
    with pytest.raises(ValueError):
        Model(Piece.constant(1.0), Piece.constant(1.0))
    with pytest.raises(ValueError):
        Piece(((0.0, 1.0),))
    m = Model.canonical(3.0)
    assert m.is_canonical and m.l_a == 1.0
    assert Model.from_json(m.to_json()) == m
    g = Model(Piece(((0.5, 0.0), (0.5, 2.0))), Piece.constant(1.0, 2.0))
    assert Model.from_json(g.to_json()) == g
    assert not g.is_canonical


def test_initial_traces_examples():
    # the textbook formulas put the coupling on letter a; the canonical model puts it on b
    swapped = Model(Piece.constant(1.0), Piece.constant(0.0))
    E = np.linspace(1.5, 40, 50)
    p = initial_traces(swapped, E)
    assert np.allclose(p.z, np.cos(np.sqrt(E)))
    assert np.allclose(p.y, np.cos(np.sqrt(E - 1.0)))
    q = initial_traces(Model.canonical(1.0), E)
    assert np.allclose(q.z, p.y) and np.allclose(q.y, p.z)
    # the invariant is symmetric under the swap
    assert np.allclose(invariant(swapped, E), invariant(Model.canonical(1.0), E), atol=1e-12)
    # free curve: (cos 2t, cos t, cos t)
    t = np.linspace(0, 12, 200)
    q = initial_traces(Model.canonical(0.0), t * t)
    assert np.allclose(q.x, np.cos(2 * t), atol=1e-12)
    assert np.allclose(q.y, np.cos(t), atol=1e-12)
    assert np.allclose(q.z, np.cos(t), atol=1e-12)
    neg = initial_traces(Model.canonical(0.0), -4.0)
    assert neg.z == pytest.approx(math.cosh(2.0))


def test_initial_traces_entire_across_branch_points():
    m = Model.canonical(2.0)
    for e0 in (0.0, 2.0):
        h = 1e-4
        E = e0 + np.array([-2 * h, -h, 0, h, 2 * h])
        for comp in initial_traces(m, E):
            left = comp[2] - comp[1]
            right = comp[3] - comp[2]
            assert left == pytest.approx(right, rel=1e-3, abs=1e-9)


def test_closed_form_examples():
    E = np.linspace(0.5, 30, 20)
    assert np.all(invariant_closed_form(0.0, E) == 0)
    assert invariant_closed_form(1.0, math.pi ** 2) == pytest.approx(0, abs=1e-30)
    assert invariant_closed_form(1.0, 2.0) == pytest.approx(
        fricke_vogt(initial_traces(Model.canonical(1.0), 2.0)), abs=1e-10)
    with pytest.raises(ValueError, match="removable singularity"):
        invariant_closed_form(1.0, 0.0)
    with pytest.raises(ValueError):
        invariant_closed_form(1.0, 1.0)
    # limit mode is continuous through the singular points
    near = invariant_closed_form(1.0, np.array([-1e-7, 1e-7]))
    assert invariant_closed_form(1.0, 0.0, limit=True) == pytest.approx(near.mean(), rel=1e-5)


def test_closed_form_matches_matrices():
    for lam in (0.5, 1.0, 4.0):
        E = np.linspace(-10, 150, 1000)
        E = E[(np.abs(E) > 1e-3) & (np.abs(E - lam) > 1e-3)]
        closed = invariant_closed_form(lam, E)
        assert np.max(np.abs(closed - invariant(Model.canonical(lam), E))) <= 1e-9


def test_log_derivative_finite_difference():
    lam, t, h = 1.0, 7.0, 1e-5
    f = lambda s: math.log(invariant_closed_form(lam, s * s))
    fd = (f(t + h) - f(t - h)) / (2 * h)
    assert log_derivative_invariant(lam, t) == pytest.approx(fd, abs=1e-5)
    # below the potential step the continuation through coth is used
    t2 = 0.6
    fd2 = (f(t2 + h) - f(t2 - h)) / (2 * h)
    assert log_derivative_invariant(lam, t2) == pytest.approx(fd2, abs=1e-5)


def test_log_derivative_free_limit():
    # as lambda -> 0 the two bracketed pairs coincide instead of cancelling:
    # the limit is 4 (cot t - 1/t), matched by finite differences of log I
    t, h = 5.3, 1e-5
    for lam in (1e-2, 1e-4, 1e-6):
        f = lambda s: math.log(invariant_closed_form(lam, s * s))
        fd = (f(t + h) - f(t - h)) / (2 * h)
        assert log_derivative_invariant(lam, t) == pytest.approx(fd, abs=1e-5)
    limit = 4 * (math.cos(t) / math.sin(t) - 1 / t)
    assert log_derivative_invariant(1e-6, t) == pytest.approx(limit, abs=1e-5)


def test_log_derivative_poles():
    with pytest.raises(ValueError, match="t = 0"):
        log_derivative_invariant(1.0, 0.0)
    with pytest.raises(ValueError, match="lambda"):
        log_derivative_invariant(1.0, 1.0)
    with pytest.raises(ValueError, match="sin t"):
        log_derivative_invariant(1.0, math.pi)


def test_log_derivative_window_bound():
    # half-period window n = 20 with trim 0.4 (see README for trim 0.3)
    t = np.linspace(20 * math.pi + 0.4, 21 * math.pi - 0.4, 2001)
    worst = max(abs(log_derivative_invariant(1.0, float(x))) for x in t)
    assert worst <= 10


def test_fibonacci_words():
    assert fibonacci_word(-1) == "b"
    assert fibonacci_word(0) == "a"
    assert fibonacci_word(1) == "ab"
    assert fibonacci_word(2) == "aba"
    assert fibonacci_word(5) == fibonacci_word(4) + fibonacci_word(3)
    with pytest.raises(ValueError):
        fibonacci_word(-2)


def test_scaled_traces_match_explicit_products():
    m = Model.canonical(2.0)
    E = np.linspace(0.1, 30, 57)
    mant, logs = scaled_word_traces(m, 12, E)
    for n in range(-1, 13):
        ref = half_trace(word_matrix(m, fibonacci_word(n), E))
        got = mant[n + 1] * np.exp(logs[n + 1])
        assert np.allclose(got, ref, rtol=1e-9, atol=1e-9)
    assert np.allclose(word_half_trace(m, 12, E), mant[-1] * np.exp(logs[-1]))
