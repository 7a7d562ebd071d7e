"""Fibonacci trace map, Fricke-Vogt invariant and orbit escape tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

log = logging.getLogger(__name__)

OVERFLOW_GUARD = 1e100


class TracePoint(NamedTuple):
    x: float
    y: float
    z: float


def trace_map(p: TracePoint) -> TracePoint:
    x, y, z = p
    return TracePoint(2 * x * y - z, x, y)


def trace_map_inv(p: TracePoint) -> TracePoint:
    x, y, z = p
    return TracePoint(y, z, 2 * y * z - x)


def fricke_vogt(p) -> float:
    """``x^2 + y^2 + z^2 - 2xyz - 1``; works on scalars or stacked arrays."""
    x, y, z = p
    return x * x + y * y + z * z - 2 * x * y * z - 1


def trace_map_array(pts: np.ndarray) -> np.ndarray:
    """Vectorized trace map on an ``(..., 3)`` array."""
    x, y, z = pts[..., 0], pts[..., 1], pts[..., 2]
    return np.stack([2 * x * y - z, x, y], axis=-1)


def per2_curve_point(x: float) -> TracePoint:
    """Point ``(x, x/(2x-1), x)`` on the curve of period-two points."""
    if x == 0.5:
        raise ValueError("pole of period-two curve at x = 1/2")
    return TracePoint(x, x / (2 * x - 1), x)


@dataclass
class TraceSequence:
    """Half-traces ``x_{-1}, x_0, x_1, ...``; ``values[0]`` is ``x_{-1}``.

    ``stopped_at`` holds the x-index where the overflow guard cut the
    recursion short, or ``None`` when all ``level`` terms were computed.
    """

    values: list[float]
    level: int
    stopped_at: int | None = None
    guard: float = OVERFLOW_GUARD

    def x(self, n: int) -> float:
        return self.values[n + 1]

    @property
    def last_index(self) -> int:
        return len(self.values) - 2


def trace_sequence(init: TracePoint, n_max: int, guard: float = OVERFLOW_GUARD,
                   compensated: bool | None = None) -> TraceSequence:
    """Iterate ``x_{n+1} = 2 x_n x_{n-1} - x_{n-2}`` from ``(x_1, x_0, x_{-1})``.

    ``compensated`` switches to double-double arithmetic; by default it is
    used when ``n_max > 40``, where cancellation in ``2xy - z`` along long
    bounded orbits starts to cost digits.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if compensated is None:
        compensated = n_max > 40
    x1, x0, xm1 = (float(v) for v in init)
    values = [xm1, x0]
    if n_max >= 1:
        values.append(x1)
    if compensated:
        return _trace_sequence_dd(values, n_max, guard)
    stopped = None
    while True:
        if abs(values[-1]) > guard:
            stopped = len(values) - 2
            break
        if len(values) - 2 >= n_max:
            break
        values.append(2 * values[-1] * values[-2] - values[-3])
    return TraceSequence(values, n_max, stopped, guard)


# -- double-double helpers (Dekker/Knuth error-free transforms) --------------
_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_mul(a, b):
    p, e = _two_prod(a[0], b[0])
    e += a[0] * b[1] + a[1] * b[0]
    return _two_sum(p, e)


def _dd_sub(a, b):
    s, e = _two_sum(a[0], -b[0])
    e += a[1] - b[1]
    return _two_sum(s, e)


def _trace_sequence_dd(values, n_max, guard):
    dd = [(v, 0.0) for v in values]
    stopped = None
    while True:
        if abs(dd[-1][0]) > guard:
            stopped = len(dd) - 2
            break
        if len(dd) - 2 >= n_max:
            break
        prod = _dd_mul(dd[-1], dd[-2])
        dd.append(_dd_sub((2 * prod[0], 2 * prod[1]), dd[-3]))
    return TraceSequence([h + l for h, l in dd], n_max, stopped, guard)


def escape_index(seq: TraceSequence) -> int | None:
    """First list position ``n`` with ``|values[n]| > 1`` and ``|values[n+1]| > 1``.

    Positions count from ``values[0] = x_{-1}``.  A candidate is accepted only
    if the magnitudes after it grow strictly up to the end of the computed
    range; a candidate failing that self-check is logged and skipped.
    """
    v = np.abs(np.asarray(seq.values, dtype=float))
    big = v > 1
    cand = np.flatnonzero(big[:-1] & big[1:])
    for n in cand:
        tail = v[n + 1:]
        if tail.size < 2 or np.all(np.diff(tail) > 0):
            return int(n)
        log.warning("escape candidate at %d rejected: tail not monotone", n)
    return None
