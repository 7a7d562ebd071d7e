"""Finite-level band sets of the continuum Fibonacci operator.

Band set of level ``n``: ``B_n = {E : |x_n(E)| <= 1}`` where ``x_n`` is the
half-trace of the transfer matrix over the Fibonacci word ``S^n(a)``.  This is
the spectrum of the periodic operator whose period cell is that word, so
classical Floquet facts apply:

* every Dirichlet eigenvalue of the cell sits in the closure of a gap, and
  consecutive Dirichlet eigenvalues enclose exactly one band;
* the Dirichlet eigenvalues below ``E`` are counted exactly by the zeros of
  the Dirichlet solution across the cell (Sturm oscillation).

The engine brackets the Dirichlet eigenvalues with that integer count and
then finds one band per bracket, so thin bands at strong coupling cannot be
skipped by an under-resolved sampling grid.
"""

from __future__ import annotations

import functools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np

from .intervals import Interval, IntervalSet
from . import _kernels as _k
from .transfer import Model, fibonacci_word

log = logging.getLogger(__name__)

ENERGY = "E"
T_PARAM = "t"

DEFAULT_TOL_E = 1e-9
DEFAULT_TOL_T = 1e-10

# fixed number of independent work chunks; thread count never changes them
_CHUNKS_PER_RANGE = 16
_GRID_FACTOR = 0.5
# above this estimated rounding error of x_n a bracket is redone in extended precision
_NOISY_LOG = math.log(1e-3)


class SamplingError(RuntimeError):
    """Raised when a bracket that must hold one band yields none."""


def fib(n: int) -> int:
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = b, a + b
    return a


def rayleigh_bound(l_a: float) -> tuple[float, float]:
    """Rayleigh quotient of the hat function on the zero piece, and ``E_0``."""
    if not l_a > 0:
        raise ValueError("l_a must be positive")
    return 12.0 / l_a ** 2, 24.0 / l_a ** 2


def rayleigh_quadrature(l_a: float, points: int = 20000) -> float:
    """Rayleigh quotient of the hat function on ``[0, l_a]`` by quadrature.

    The hat vanishes at both ends and peaks at the midpoint; the potential
    is zero there, so the quotient is ``int |phi'|^2 / int |phi|^2``.
    """
    if not l_a > 0:
        raise ValueError("l_a must be positive")
    x = np.linspace(0.0, l_a, points)
    phi = 1.0 - np.abs(2.0 * x / l_a - 1.0)
    dphi = np.gradient(phi, x)
    return float(np.trapezoid(dphi ** 2, x) / np.trapezoid(phi ** 2, x))


# -- evaluation helpers -------------------------------------------------------

class _Level:
    """Flattened word data for one level and one variable."""

    def __init__(self, model: Model, n: int, variable: str):
        if n < -1:
            raise ValueError("level must be >= -1")
        self.model = model
        self.n = n
        self.variable = variable
        self.square = variable == T_PARAM
        word = fibonacci_word(n)
        self.word_len = len(word)
        segs = [seg for ch in word
                for seg in (model.piece_a if ch == "a" else model.piece_b).segments]
        self.lens = np.array([l for l, _ in segs])
        self.vals = np.array([v for _, v in segs])
        self.letters = tuple(
            np.array([c[i] for c in piece.segments], dtype=float)
            for piece in (model.piece_a, model.piece_b) for i in (0, 1))

    def energy(self, s):
        s = np.asarray(s, dtype=float)
        return s * s if self.square else s

    def trace(self, s):
        """Sign and log-magnitude of ``x_n`` at parameter values ``s``."""
        E = np.atleast_1d(self.energy(s)).astype(float)
        return _k.trace_array(E, self.n, *self.letters)

    def trace_cond(self, s):
        E = np.atleast_1d(self.energy(s)).astype(float)
        return _k.trace_cond_array(E, self.n, *self.letters)

    def inside(self, s):
        return self.trace(s)[1] <= 1e-15

    def dirichlet_count(self, s) -> np.ndarray:
        """Number of zeros in (0, L] of the Dirichlet solution over the word."""
        E = np.atleast_1d(self.energy(s)).astype(float)
        return _k.count_array(E, self.lens, self.vals)

    def brackets(self, left, right, tol, noisy=math.inf):
        return _k.bands_from_brackets(np.ascontiguousarray(left, dtype=float),
                                      np.ascontiguousarray(right, dtype=float),
                                      tol, self.square, self.n, *self.letters, noisy)

    def noise(self, s) -> np.ndarray:
        """Log of the estimated rounding error of ``x_n`` in double precision."""
        return self.trace_cond(s)[3]


def _grid(variable: str, lo: float, hi: float, word_len: int) -> np.ndarray:
    """Sampling grid with step 0.5/len(word) in t (or in sqrt|E| below 0)."""
    h = _GRID_FACTOR / word_len
    if variable == T_PARAM:
        m = max(2, int(math.ceil((hi - lo) / h)) + 1)
        return np.linspace(lo, hi, m)
    parts = []
    if lo < 0:
        top = min(hi, 0.0)
        a, b = math.sqrt(-lo), math.sqrt(-top)
        m = max(2, int(math.ceil((a - b) / h)) + 1)
        parts.append(-np.linspace(a, b, m) ** 2)
    if hi > 0:
        bot = max(lo, 0.0)
        a, b = math.sqrt(bot), math.sqrt(hi)
        m = max(2, int(math.ceil((b - a) / h)) + 1)
        parts.append(np.linspace(a, b, m) ** 2)
    g = np.unique(np.concatenate(parts))
    g[0], g[-1] = lo, hi
    return g


def _dirichlet_brackets(level: _Level, lo: float, hi: float):
    """Float-resolution brackets ``(a_j, b_j]`` of the Dirichlet points in (lo, hi]."""
    g = _grid(level.variable, lo, hi, level.word_len)
    cnt = level.dirichlet_count(g)
    # running max guards against one-ulp count jitter exactly at an eigenvalue
    cnt = np.maximum.accumulate(cnt)
    first, last = cnt[0], cnt[-1]
    if last <= first:
        return np.empty(0), np.empty(0)
    targets = np.arange(first + 1, last + 1)
    cell = np.searchsorted(cnt, targets, side="left")
    a, b = _k.bisect_count(g[cell - 1].copy(), g[cell].copy(), targets,
                           level.square, level.lens, level.vals)
    return np.maximum.accumulate(a), np.maximum.accumulate(b)


def _bands_in_chunk(level: _Level, lo: float, hi: float, tol: float) -> np.ndarray:
    mu_lo, mu_hi = _dirichlet_brackets(level, lo, hi)
    # band j+1 lives between Dirichlet points j and j+1
    left = np.concatenate([[lo], mu_hi])
    right = np.concatenate([mu_lo, [hi]])
    right = np.maximum(right, left)
    lo_e, hi_e, status = level.brackets(left, right, tol, _NOISY_LOG)

    interior = np.zeros(left.shape, dtype=bool)
    interior[1:-1] = True
    for i in np.flatnonzero((interior & (status == 2)) | (status == 3)):
        if status[i] == 2:
            band = _rescue(level, left[i], right[i], tol)
        else:
            band = _mp_bracket(level, left[i], right[i], tol, required=bool(interior[i]))
        if band is None:
            status[i] = 0
        else:
            lo_e[i], hi_e[i] = band
            status[i] = 1
    ok = status == 1
    return np.column_stack([lo_e[ok], hi_e[ok]])


def _rescue(level: _Level, a: float, b: float, tol: float) -> tuple[float, float]:
    """Search harder in a bracket that must hold a band but showed none.

    A dense rescan in double precision is tried first, then the bracket is
    redone in extended precision.
    """
    if b - a <= 2 * tol:
        mid = 0.5 * (a + b)
        return mid, mid
    s = np.linspace(a, b, 1025)
    sg, lg, _, noise = level.trace_cond(s)
    if noise.max() <= _NOISY_LOG:
        # the bracket ends may sit on neighbouring bands; prefer interior points
        ins = np.flatnonzero(lg[1:-1] <= 1e-15) + 1
        if not ins.size:
            ins = np.flatnonzero(lg <= 1e-15)
        if ins.size:
            q = float(s[ins[0]])
            return _edge_from(level, q, a, -tol), _edge_from(level, q, b, tol)
        ch = np.flatnonzero(sg[1:] != sg[:-1])
        if ch.size:
            j = ch[0]
            lo_e, hi_e, st = level.brackets(s[j:j + 1], s[j + 1:j + 2], tol)
            if st[0] == 1:
                return float(lo_e[0]), float(hi_e[0])
    return _mp_bracket(level, a, b, tol, required=True)


def _edge_from(level: _Level, q: float, end: float, step: float) -> float:
    """Band edge beside the inside point ``q``, searching towards ``end``.

    Walks out with doubling steps to the first outside point (the bracket end
    may itself lie on a neighbouring band, so it is not trusted), then bisects.
    """
    tol = abs(step)
    inner = q
    while True:
        x = q + step
        if (x - end) * step >= 0:
            x = end
        if not level.inside(np.array([x]))[0]:
            out = x
            break
        if x == end:
            return end
        inner = x
        step *= 2
    while abs(out - inner) > tol:
        mid = 0.5 * (out + inner)
        if level.inside(np.array([mid]))[0]:
            inner = mid
        else:
            out = mid
    return inner


# -- extended precision -------------------------------------------------------

_LOCAL = threading.local()


def _ctx() -> mpmath.ctx_mp.MPContext:
    # mpmath's global context is shared by threads; give each its own precision
    ctx = getattr(_LOCAL, "ctx", None)
    if ctx is None:
        ctx = _LOCAL.ctx = mpmath.ctx_mp.MPContext()
    return ctx

def _mp_letter(piece, E):
    ctx = _ctx()
    m00, m01, m10, m11 = ctx.mpf(1), ctx.mpf(0), ctx.mpf(0), ctx.mpf(1)
    for length, v in piece.segments:
        z = E - v
        if z > 0:
            k = ctx.sqrt(z)
            c, sn = ctx.cos(k * length), ctx.sin(k * length) / k
        elif z < 0:
            k = ctx.sqrt(-z)
            c, sn = ctx.cosh(k * length), ctx.sinh(k * length) / k
        else:
            c, sn = ctx.mpf(1), ctx.mpf(length)
        a10 = -z * sn
        m00, m01, m10, m11 = (c * m00 + sn * m10, c * m01 + sn * m11,
                              a10 * m00 + c * m10, a10 * m01 + c * m11)
    return m00, m01, m10, m11


def _mp_trace(level: _Level, s):
    """``x_n`` at parameter ``s`` in the current mpmath precision."""
    ctx = _ctx()
    E = s * s if level.square else s
    prev = _mp_letter(level.model.piece_b, E)
    if level.n == -1:
        return (prev[0] + prev[3]) / 2
    cur = _mp_letter(level.model.piece_a, E)
    for _ in range(level.n):
        p00, p01, p10, p11 = prev
        c00, c01, c10, c11 = cur
        prev, cur = cur, (p00 * c00 + p01 * c10, p00 * c01 + p01 * c11,
                          p10 * c00 + p11 * c10, p10 * c01 + p11 * c11)
    return (cur[0] + cur[3]) / 2


def _mp_bracket(level: _Level, a: float, b: float, tol: float,
                required: bool) -> tuple[float, float] | None:
    """Find the band of one bracket in extended precision.

    Precision is chosen from the double-precision error estimate so that
    ``x_n`` is resolved well below 1.  The bracket is searched first; since
    the double-precision Dirichlet points can themselves be off when the
    product is ill-conditioned, the search then widens past both ends.
    Returns ``None`` when no band exists and none is required.
    """
    ctx = _ctx()
    if required and b - a <= 2 * tol:
        # Dirichlet points closer than tol squeeze the band to a point
        mid = 0.5 * (a + b)
        return mid, mid
    noise = max(float(level.noise(np.array([a, b])).max()), 0.0)
    digits = int((noise + 40) / math.log(10)) + 15
    res = float(np.spacing(max(abs(a), abs(b), 1.0)))
    with ctx.workdps(digits):
        lo, hi = ctx.mpf(a), ctx.mpf(b)
        pts = [lo + (hi - lo) * i / 16 for i in range(17)]
        samples = [(x, _mp_trace(level, x)) for x in pts]
        q = _mp_locate(level, samples, tol)
        if q is None and b > a:
            j = min(range(len(samples)), key=lambda i: abs(samples[i][1]))
            x, fx = _mp_golden(level, samples[max(j - 1, 0)][0],
                               samples[min(j + 1, len(samples) - 1)][0], tol * 1e-3)
            if fx <= 1:
                q = x
        # float Dirichlet points can be an ulp off; start the widening there
        d = 4 * res
        # an optional edge bracket may only lose its band to misplaced ends;
        # searching farther would pick up a neighbour's band
        d_max = max(d, 0.25 * (b - a)) if required else d
        prev = 0.0
        while q is None and prev < d_max:
            d = min(d, d_max)
            for end, sgn in ((lo, -1), (hi, 1)):
                new = [end + sgn * (prev + (d - prev) * i / 4) for i in range(1, 5)]
                samples.extend((x, _mp_trace(level, x)) for x in new)
            samples.sort(key=lambda p: p[0])
            q = _mp_locate(level, samples, tol)
            prev, d = d, 10 * d
        if q is None:
            j = min(range(len(samples)), key=lambda i: abs(samples[i][1]))
            x, fx = _mp_golden(level, samples[max(j - 1, 0)][0],
                               samples[min(j + 1, len(samples) - 1)][0], res * 1e-6)
            if fx <= 1:
                q = x
        if q is None:
            if not required:
                return None
            raise SamplingError(
                f"level {level.n}: no band between Dirichlet points {a!r} and {b!r}; "
                "tighten tol or refine the sampling grid")
        if abs(_mp_trace(level, q)) > 1:
            # zero of x_n pinned to tol; the band around it is narrower still
            return float(q), float(q)
        # nearest outside points; farther samples may lie in a neighbouring band
        ends = samples[0][0], samples[-1][0]
        outer_lo = _mp_outside(level, [x for x, v in samples if x < q and abs(v) > 1], q, -tol,
                               min(ends[0], q))
        outer_hi = _mp_outside(level, [x for x, v in samples if x > q and abs(v) > 1], q, tol,
                               max(ends[1], q))
        left = outer_lo if outer_lo is not None else ends[0]
        right = outer_hi if outer_hi is not None else ends[1]
    return float(left), float(right)


def _mp_locate(level: _Level, samples, tol: float):
    """A point with ``|x_n| <= 1`` from sorted samples, or ``None``.

    The outermost samples are tried last: they may sit on a neighbouring band.
    """
    ctx = _ctx()
    for x, v in samples[1:-1] + [samples[0], samples[-1]]:
        if abs(v) <= 1:
            return x
    for (x0, v0), (x1, v1) in zip(samples, samples[1:]):
        if ctx.sign(v0) != ctx.sign(v1):
            return _mp_sign_walk(level, x0, x1, v1, tol)
    return None


def _mp_golden(level: _Level, lo, hi, width: float):
    ctx = _ctx()
    g = (ctx.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = abs(_mp_trace(level, c)), abs(_mp_trace(level, d))
    while hi - lo > width:
        if fc <= 1:
            return c, fc
        if fd <= 1:
            return d, fd
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = abs(_mp_trace(level, c))
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = abs(_mp_trace(level, d))
    return (c, fc) if fc < fd else (d, fd)


def _mp_sign_walk(level: _Level, x, y, vy, width: float):
    """Bisect a sign change of ``x_n`` until ``|x_n| <= 1`` or width ``width``."""
    ctx = _ctx()
    sy = ctx.sign(vy)
    while y - x > width:
        mid = (x + y) / 2
        v = _mp_trace(level, mid)
        if abs(v) <= 1:
            return mid
        if ctx.sign(v) == sy:
            y = mid
        else:
            x = mid
    return (x + y) / 2


def _mp_outside(level: _Level, candidates, q, step: float, limit):
    """Edge beside the inside point ``q``, walking outward to ``limit``.

    Steps double until an outside point appears; a known outside sample caps
    the walk.  Returns ``None`` when the band reaches ``limit``, the end of
    the searched range.
    """
    tol = abs(step)
    cap = (max(candidates) if step < 0 else min(candidates)) if candidates else None
    stop = cap if cap is not None else limit
    inner = q
    x = q + step
    while (stop - x) * step > 0:
        if abs(_mp_trace(level, x)) > 1:
            return _mp_edge(level, x, inner, tol)
        inner = x
        step *= 2
        x = q + step
    if cap is not None or abs(_mp_trace(level, limit)) > 1:
        return _mp_edge(level, stop, inner, tol)
    return None


def _mp_edge(level: _Level, out_pt, in_pt, width: float):
    ctx = _ctx()
    while abs(in_pt - out_pt) > width:
        mid = (in_pt + out_pt) / 2
        if abs(_mp_trace(level, mid)) <= 1:
            in_pt = mid
        else:
            out_pt = mid
    return in_pt


def _chunk_edges(variable: str, lo: float, hi: float, chunks: int) -> np.ndarray:
    if variable == ENERGY and lo >= 0:
        # equal widths in sqrt(E) keep the band count per chunk balanced
        return np.linspace(math.sqrt(lo), math.sqrt(hi), chunks + 1) ** 2
    return np.linspace(lo, hi, chunks + 1)


def band_set(m: Model, n: int, rng: Interval, tol: float = DEFAULT_TOL_E,
             variable: str = ENERGY, threads: int = 1) -> IntervalSet:
    """``{s in rng : |x_n(E(s))| <= 1}`` with edges located to ``tol`` in s.

    Results are memoized on all arguments (see :func:`clear_cache`).
    """
    return _band_set_cached(m, n, rng, float(tol), variable, threads)


def clear_cache() -> None:
    _band_set_cached.cache_clear()


@functools.lru_cache(maxsize=256)
def _band_set_cached(m: Model, n: int, rng: Interval, tol: float, variable: str,
                     threads: int = 1) -> IntervalSet:
    if tol <= 0:
        raise ValueError("tol must be positive")
    if variable not in (ENERGY, T_PARAM):
        raise ValueError(f"unknown variable {variable!r}")
    if variable == T_PARAM and rng.lo < 0:
        raise ValueError("t-range must lie in [0, inf)")
    level = _Level(m, n, variable)
    if rng.hi == rng.lo:
        return IntervalSet([[rng.lo, rng.hi]]) if level.inside(np.array([rng.lo]))[0] else IntervalSet.empty()
    edges = _chunk_edges(variable, rng.lo, rng.hi, _CHUNKS_PER_RANGE)
    edges[0], edges[-1] = rng.lo, rng.hi
    jobs = list(zip(edges[:-1], edges[1:]))

    def run(job):
        return _bands_in_chunk(level, float(job[0]), float(job[1]), tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    arrs = [p for p in parts if p.size]
    if not arrs:
        return IntervalSet.empty()
    return IntervalSet(np.vstack(arrs), merge_tol=_merge_tol(tol))


def _merge_tol(tol: float) -> float:
    # chunk seams and bisection noise both sit below the solver tolerance
    return max(1e-12, 0.5 * tol)


@dataclass(frozen=True)
class SpectrumApproximant:
    set: IntervalSet
    level: int
    variable: str
    model: Model
    e_max: float
    tol: float
    lower: float = 0.0

    @property
    def range(self) -> Interval:
        hi = math.sqrt(self.e_max) if self.variable == T_PARAM else self.e_max
        return Interval(self.lower, hi)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "variable": self.variable,
            "e_max": self.e_max,
            "lower": self.lower,
            "tol": self.tol,
            "model": self.model.to_json(),
            "intervals": self.set.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SpectrumApproximant":
        return cls(
            set=IntervalSet(obj["intervals"]),
            level=int(obj["level"]),
            variable=obj["variable"],
            model=Model.from_json(obj["model"]),
            e_max=float(obj["e_max"]),
            tol=float(obj["tol"]),
            lower=float(obj.get("lower", 0.0)),
        )


def approximant(m: Model, k: int, rng: Interval, tol: float = DEFAULT_TOL_E,
                variable: str = ENERGY, threads: int = 1) -> SpectrumApproximant:
    """Level-k stand-in for the spectrum: ``B_k`` union ``B_{k+1}``."""
    if k < 1:
        raise ValueError("level k must be >= 1")
    s = band_set(m, k, rng, tol, variable, threads) | band_set(m, k + 1, rng, tol, variable, threads)
    e_max = rng.hi ** 2 if variable == T_PARAM else rng.hi
    return SpectrumApproximant(s, k, variable, m, e_max, tol, rng.lo)


def spectrum_in_t(m: Model, k: int, t_range: Interval, tol: float = DEFAULT_TOL_T,
                  threads: int = 1) -> SpectrumApproximant:
    if t_range.lo < 0:
        raise ValueError("t-range must lie in [0, inf)")
    return approximant(m, k, t_range, tol, T_PARAM, threads)


def level_distances(m: Model, levels, rng: Interval, tol: float = DEFAULT_TOL_E,
                    variable: str = ENERGY) -> list[tuple[int, float]]:
    """Hausdorff distance between consecutive approximants, per level."""
    from .intervals import hausdorff

    sets = [approximant(m, k, rng, tol, variable).set for k in levels]
    return [(k, hausdorff(a, b)) for k, a, b in zip(levels[1:], sets[:-1], sets[1:])]
