"""Transfer matrices of piecewise-constant building blocks.

All evaluators accept scalar or array energies and broadcast.  Matrices are
returned with shape ``E.shape + (2, 2)`` in the ordering

    [[u_N(l), u_D(l)],
     [u_N'(l), u_D'(l)]]

where ``u_D``/``u_N`` solve ``-u'' + v u = E u`` with Dirichlet/Neumann data
at the left end of the block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trace import TracePoint, fricke_vogt

# below this |E - v| the cos/sinc pair is summed as a power series
SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class Piece:
    """Piecewise-constant profile given as ``((length, value), ...)``."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        segs = tuple((float(l), float(v)) for l, v in self.segments)
        if not segs:
            raise ValueError("a piece needs at least one segment")
        for l, v in segs:
            if not (l > 0 and math.isfinite(l)):
                raise ValueError(f"segment length must be positive, got {l}")
            if not math.isfinite(v):
                raise ValueError("segment value must be finite")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, value: float, length: float = 1.0) -> "Piece":
        return cls(((length, value),))

    @property
    def length(self) -> float:
        return sum(l for l, _ in self.segments)

    @property
    def min_value(self) -> float:
        return min(v for _, v in self.segments)

    def profile(self) -> tuple[tuple[float, float], ...]:
        """Canonical profile: adjacent equal-value segments fused."""
        out: list[list[float]] = []
        for l, v in self.segments:
            if out and out[-1][1] == v:
                out[-1][0] += l
            else:
                out.append([l, v])
        return tuple((l, v) for l, v in out)

    def to_json(self) -> list[list[float]]:
        return [[l, v] for l, v in self.segments]


@dataclass(frozen=True)
class Model:
    """Building blocks ``(f_a, f_b)`` of the Fibonacci concatenation.

    Only ``piece_a != piece_b`` is enforced.  Distinct constant pieces give
    aperiodic potentials; for general profiles aperiodicity is the caller's
    responsibility.
    """

    piece_a: Piece
    piece_b: Piece
    coupling: float | None = None

    def __post_init__(self):
        if self.piece_a.profile() == self.piece_b.profile():
            raise ValueError("piece_a and piece_b must differ as profiles")

    @classmethod
    def canonical(cls, lam: float) -> "Model":
        """``f_a = 0``, ``f_b = lam`` on unit intervals.

        ``lam = 0`` is accepted as the free reference model even though the
        two pieces then coincide.
        """
        a, b = Piece.constant(0.0), Piece.constant(float(lam))
        obj = object.__new__(cls)
        object.__setattr__(obj, "piece_a", a)
        object.__setattr__(obj, "piece_b", b)
        object.__setattr__(obj, "coupling", float(lam))
        return obj

    @property
    def is_canonical(self) -> bool:
        return self.coupling is not None

    @property
    def l_a(self) -> float:
        return self.piece_a.length

    def to_json(self) -> dict:
        if self.is_canonical:
            return {"lambda": self.coupling}
        return {"a": self.piece_a.to_json(), "b": self.piece_b.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "Model":
        if "lambda" in obj:
            return cls.canonical(float(obj["lambda"]))
        return cls(Piece(tuple(map(tuple, obj["a"]))), Piece(tuple(map(tuple, obj["b"]))))


def _cos_sinc(z: np.ndarray, length: float):
    """``cos(sqrt(z) l)`` and ``sin(sqrt(z) l)/sqrt(z)`` as entire functions of z."""
    z = np.asarray(z, dtype=float)
    c = np.empty_like(z)
    s = np.empty_like(z)
    small = np.abs(z) < SERIES_CUTOFF
    pos = (z > 0) & ~small
    neg = (z < 0) & ~small
    if np.any(pos):
        k = np.sqrt(z[pos])
        c[pos] = np.cos(k * length)
        s[pos] = np.sin(k * length) / k
    if np.any(neg):
        kap = np.sqrt(-z[neg])
        with np.errstate(over="ignore"):
            c[neg] = np.cosh(kap * length)
            s[neg] = np.sinh(kap * length) / kap
    if np.any(small):
        w = -z[small] * length * length
        # four terms leave a remainder below 1e-30 for |z| l^2 < 1e-6
        c[small] = 1 + w / 2 * (1 + w / 12 * (1 + w / 30 * (1 + w / 56)))
        s[small] = length * (1 + w / 6 * (1 + w / 20 * (1 + w / 42 * (1 + w / 72))))
    return c, s


def constant_piece_matrix(v: float, length: float, E) -> np.ndarray:
    if not length > 0:
        raise ValueError("length must be positive")
    z = np.asarray(E, dtype=float) - v
    c, s = _cos_sinc(z, length)
    m = np.empty(z.shape + (2, 2))
    m[..., 0, 0] = c
    m[..., 0, 1] = s
    m[..., 1, 0] = -z * s
    m[..., 1, 1] = c
    return m


def piece_matrix(p: Piece, E) -> np.ndarray:
    m = None
    for length, v in p.segments:
        seg = constant_piece_matrix(v, length, E)
        m = seg if m is None else seg @ m
    return m


def letter_matrices(m: Model, E) -> tuple[np.ndarray, np.ndarray]:
    return piece_matrix(m.piece_a, E), piece_matrix(m.piece_b, E)


def half_trace(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat[..., 0, 0] + mat[..., 1, 1])


def initial_traces(m: Model, E) -> TracePoint:
    """``(x_1, x_0, x_{-1})`` = half-traces of ``M(ab)``, ``M(a)``, ``M(b)``."""
    ma, mb = letter_matrices(m, E)
    mab = mb @ ma
    return TracePoint(half_trace(mab), half_trace(ma), half_trace(mb))


def invariant(m: Model, E) -> np.ndarray:
    """Fricke-Vogt invariant along the curve of initial conditions."""
    with np.errstate(over="ignore", invalid="ignore"):
        return fricke_vogt(initial_traces(m, E))


def _sinc_sqrt(z: np.ndarray) -> np.ndarray:
    _, s = _cos_sinc(z, 1.0)
    return s


def invariant_closed_form(lam: float, E, limit: bool = False):
    """Invariant of the canonical model from its explicit formula.

    Written as ``lam^2/4 * sinc(E)^2 * sinc(E - lam)^2`` with
    ``sinc(z) = sin(sqrt z)/sqrt z`` continued through ``z <= 0``.  At
    ``E in {0, lam}`` the quotient form has removable singularities; those
    points are refused unless ``limit=True``.
    """
    E_arr = np.asarray(E, dtype=float)
    if not limit and np.any((E_arr == 0) | (E_arr == lam)):
        raise ValueError("removable singularity at E = 0 or E = lambda; use limit mode")
    val = 0.25 * lam * lam * _sinc_sqrt(E_arr) ** 2 * _sinc_sqrt(E_arr - lam) ** 2
    return float(val) if np.ndim(val) == 0 else val


def log_derivative_invariant(lam: float, t: float) -> float:
    """``d/dt log I(t^2)`` for the canonical model.

    Equals ``2 cot t - 2/t + 2 t cot(s)/s - 2 t/s^2`` with ``s = sqrt(t^2 - lam)``,
    continued to ``t^2 < lam`` through ``cot(i q)/(i q) = -coth(q)/q``.
    """
    if t == 0:
        raise ValueError("pole: t = 0 (the 1/E factor)")
    w = t * t - lam
    if w == 0:
        raise ValueError("pole: t^2 = lambda (the 1/(E - lambda) factor)")
    st = math.sin(t)
    if abs(st) < 1e-14:
        raise ValueError("pole: sin t = 0 (invariant vanishes)")
    out = 2 * math.cos(t) / st - 2 / t
    if w > 0:
        s = math.sqrt(w)
        ss = math.sin(s)
        if abs(ss) < 1e-14:
            raise ValueError("pole: sin sqrt(t^2 - lambda) = 0 (invariant vanishes)")
        out += 2 * t * math.cos(s) / (ss * s) - 2 * t / w
    else:
        q = math.sqrt(-w)
        out += -2 * t / (math.tanh(q) * q) - 2 * t / w
    return out


# -- Fibonacci words --------------------------------------------------------

def fibonacci_word(n: int) -> str:
    """``S^n(a)`` for ``a -> ab, b -> a``; ``n = -1`` gives ``"b"``."""
    if n < -1:
        raise ValueError("n must be >= -1")
    if n == -1:
        return "b"
    prev, cur = "b", "a"
    for _ in range(n):
        prev, cur = cur, cur + prev
    return cur


def word_matrix(m: Model, word: str, E) -> np.ndarray:
    """Transfer matrix of a word by explicit left-multiplication."""
    ma, mb = letter_matrices(m, E)
    out = None
    for ch in word:
        f = ma if ch == "a" else mb
        out = f if out is None else f @ out
    return out


def scaled_word_traces(m: Model, n: int, E, mats=None):
    """Half-traces of ``M(S^j(a))`` for ``j = -1..n`` in scaled form.

    Uses ``M_{j+1} = M_{j-1} M_j`` with each product renormalized, so the
    result is ``(mantissa, log_scale)`` arrays of shape ``(n + 2,) + E.shape``
    with ``x_j = mantissa * exp(log_scale)``.  Nothing overflows even when
    ``|x_j|`` exceeds the float range.
    """
    if n < -1:
        raise ValueError("n must be >= -1")
    ma, mb = letter_matrices(m, E) if mats is None else mats
    E_shape = np.shape(E)
    mant = np.empty((n + 2,) + E_shape)
    logs = np.empty((n + 2,) + E_shape)

    def norm(mat):
        s = np.max(np.abs(mat), axis=(-2, -1))
        s = np.where(s > 0, s, 1.0)
        return mat / s[..., None, None], np.log(s)

    prev, lp = norm(mb)
    cur, lc = norm(ma)
    mant[0], logs[0] = half_trace(prev), lp
    if n >= 0:
        mant[1], logs[1] = half_trace(cur), lc
    for j in range(1, n + 1):
        nxt, ln = norm(prev @ cur)
        ln = ln + lp + lc
        prev, lp, cur, lc = cur, lc, nxt, ln
        mant[j + 1], logs[j + 1] = half_trace(cur), lc
    return mant, logs


def word_half_trace(m: Model, n: int, E) -> np.ndarray:
    """``x_n(E)``; magnitudes beyond the float range come back as +-inf."""
    mant, logs = scaled_word_traces(m, n, E)
    with np.errstate(over="ignore"):
        return mant[-1] * np.exp(logs[-1])
