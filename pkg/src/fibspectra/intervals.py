"""Finite unions of disjoint closed intervals.

Spectra, bands, gaps and Minkowski sums are all carried as
:class:`IntervalSet` values.  Endpoints are binary floats; two intervals
closer than ``MERGE_TOL`` are merged on normalization so that root-finding
noise never shows up as a phantom gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

MERGE_TOL = 1e-12

# Minkowski sums are formed blockwise so the pairwise table never exceeds
# this many intervals at once.
_SUM_BLOCK = 2_000_000


class EmptySetError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"non-finite endpoint in [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


class IntervalSet:
    """Immutable normalized union of closed intervals.

    Stored as an ``(n, 2)`` float array of sorted, pairwise disjoint rows
    separated by gaps wider than the merge tolerance.
    """

    __slots__ = ("_a",)

    def __init__(self, raw=(), merge_tol: float = MERGE_TOL):
        self._a = _normalize_array(_as_array(raw), merge_tol)
        self._a.setflags(write=False)

    @classmethod
    def _from_normalized(cls, arr: np.ndarray) -> "IntervalSet":
        obj = cls.__new__(cls)
        arr = np.ascontiguousarray(arr, dtype=float).reshape(-1, 2)
        arr.setflags(write=False)
        obj._a = arr
        return obj

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls._from_normalized(np.empty((0, 2)))

    # -- basic protocol -------------------------------------------------
    @property
    def array(self) -> np.ndarray:
        return self._a

    @property
    def lo(self) -> np.ndarray:
        return self._a[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self._a[:, 1]

    @property
    def intervals(self) -> list[Interval]:
        return [Interval(float(a), float(b)) for a, b in self._a]

    def __len__(self) -> int:
        return self._a.shape[0]

    def __bool__(self) -> bool:
        return len(self) > 0

    def __iter__(self):
        return iter(self.intervals)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.all(self._a == other._a))

    def __repr__(self) -> str:
        if len(self) > 6:
            head = ", ".join(f"[{a:.6g}, {b:.6g}]" for a, b in self._a[:3])
            return f"IntervalSet({len(self)} intervals: {head}, ...)"
        return "IntervalSet([" + ", ".join(f"[{a!r}, {b!r}]" for a, b in self._a) + "])"

    def tolist(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in self._a]

    def to_json(self) -> dict:
        return {"intervals": self.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "IntervalSet":
        return cls(obj["intervals"])

    # -- set algebra ------------------------------------------------------
    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(np.vstack([self._a, other._a]))

    __or__ = union

    def intersect(self, other: "IntervalSet | Interval") -> "IntervalSet":
        if isinstance(other, Interval):
            other = IntervalSet([[other.lo, other.hi]])
        return _intersect(self, other)

    __and__ = intersect

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self.intersect(Interval(lo, hi))

    def dilate(self, r: float) -> "IntervalSet":
        return IntervalSet(self._a + np.array([-r, r]))

    def affine(self, scale: float, shift: float = 0.0) -> "IntervalSet":
        if scale <= 0:
            raise ValueError("affine image needs a positive scale")
        return IntervalSet._from_normalized(self._a * scale + shift)

    def contains(self, other: "IntervalSet", tol: float = 0.0) -> bool:
        """True when ``other`` lies inside ``self`` dilated by ``tol``."""
        if not other:
            return True
        if not self:
            return False
        big = self.dilate(tol) if tol > 0 else self
        idx = np.searchsorted(big.lo, other.lo, side="right") - 1
        if np.any(idx < 0):
            return False
        return bool(np.all(other.hi <= big.hi[idx]))


def _as_array(raw) -> np.ndarray:
    if isinstance(raw, IntervalSet):
        return raw.array.copy()
    if isinstance(raw, Interval):
        return np.array([[raw.lo, raw.hi]], dtype=float)
    rows = []
    if isinstance(raw, np.ndarray):
        arr = np.asarray(raw, dtype=float)
        if arr.size == 0:
            return np.empty((0, 2))
        arr = arr.reshape(-1, 2)
    else:
        for item in raw:
            if isinstance(item, Interval):
                rows.append((item.lo, item.hi))
            else:
                lo, hi = item
                rows.append((lo, hi))
        if not rows:
            return np.empty((0, 2))
        arr = np.array(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("interval endpoints must be finite")
    bad = arr[:, 0] > arr[:, 1]
    if np.any(bad):
        lo, hi = arr[np.argmax(bad)]
        raise ValueError(f"interval with lo > hi: [{lo}, {hi}]")
    return arr


def _normalize_array(arr: np.ndarray, merge_tol: float) -> np.ndarray:
    if arr.shape[0] == 0:
        return np.empty((0, 2))
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    lo, hi = arr[:, 0], arr[:, 1]
    reach = np.maximum.accumulate(hi)
    # a new component starts wherever lo clears everything seen so far
    starts = np.empty(len(lo), dtype=bool)
    starts[0] = True
    starts[1:] = lo[1:] - reach[:-1] > merge_tol
    first = np.flatnonzero(starts)
    last = np.r_[first[1:] - 1, len(lo) - 1]
    return np.column_stack([lo[first], reach[last]])


def normalize(raw, merge_tol: float = MERGE_TOL) -> IntervalSet:
    """Sort and merge raw ``[lo, hi]`` pairs into an :class:`IntervalSet`."""
    return IntervalSet(raw, merge_tol)


def _intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    if not a or not b:
        return IntervalSet.empty()
    if len(a) > len(b):
        a, b = b, a
    # two-pointer sweep, vectorized through searchsorted on b
    out = []
    bl, bh = b.lo, b.hi
    for lo, hi in a.array:
        i = np.searchsorted(bh, lo, side="left")
        j = np.searchsorted(bl, hi, side="right")
        if i >= j:
            continue
        seg = np.column_stack([np.maximum(bl[i:j], lo), np.minimum(bh[i:j], hi)])
        out.append(seg)
    if not out:
        return IntervalSet.empty()
    return IntervalSet(np.vstack(out))


def union_all(sets: Iterable[IntervalSet]) -> IntervalSet:
    arrs = [s.array for s in sets if s]
    if not arrs:
        return IntervalSet.empty()
    return IntervalSet(np.vstack(arrs))


def minkowski_sum(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    """``{x + y : x in a, y in b}`` for finite interval unions."""
    if not a or not b:
        return IntervalSet.empty()
    if len(a) < len(b):
        a, b = b, a
    block = max(1, _SUM_BLOCK // len(b))
    parts = []
    for start in range(0, len(a), block):
        chunk = a.array[start:start + block]
        lo = (chunk[:, 0:1] + b.lo[None, :]).ravel()
        hi = (chunk[:, 1:2] + b.hi[None, :]).ravel()
        parts.append(_normalize_array(np.column_stack([lo, hi]), MERGE_TOL))
    if len(parts) == 1:
        return IntervalSet._from_normalized(parts[0])
    return IntervalSet(np.vstack(parts))


def minkowski_power(a: IntervalSet, d: int) -> IntervalSet:
    """d-fold sum ``a + a + ... + a``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    out = a
    for _ in range(d - 1):
        out = minkowski_sum(out, a)
    return out


def hull(a: IntervalSet) -> Interval:
    if not a:
        raise EmptySetError("empty set has no hull")
    return Interval(float(a.lo[0]), float(a.hi[-1]))


def diameter(a: IntervalSet) -> float:
    return hull(a).width


def gaps(a: IntervalSet) -> list[Interval]:
    """Closures of the bounded components of the complement."""
    if not a:
        raise EmptySetError("empty set has no hull")
    return [Interval(float(x), float(y)) for x, y in zip(a.hi[:-1], a.lo[1:])]


def gap_array(a: IntervalSet) -> np.ndarray:
    if not a:
        raise EmptySetError("empty set has no hull")
    return np.column_stack([a.hi[:-1], a.lo[1:]])


def measure(a: IntervalSet) -> float:
    if not a:
        return 0.0
    return float(np.sum(a.hi - a.lo))


def largest_gap(a: IntervalSet) -> float:
    if not a:
        raise EmptySetError("empty set has no hull")
    if len(a) == 1:
        return 0.0
    return float(np.max(a.lo[1:] - a.hi[:-1]))


def square_image(a: IntervalSet) -> IntervalSet:
    """Image under x -> x**2 of a set contained in [0, inf)."""
    if a and a.lo[0] < 0:
        raise ValueError(f"square_image needs a subset of [0, inf); got lo={a.lo[0]}")
    return IntervalSet._from_normalized(a.array ** 2)


def covers_interval(a: IntervalSet, target: Interval, tol: float) -> bool:
    """True iff every point of ``target`` lies within ``tol`` of ``a``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not a:
        return False
    h = hull(a)
    if h.lo - tol > target.lo or h.hi + tol < target.hi:
        return False
    if len(a) == 1:
        return True
    g = gap_array(a)
    wide = (g[:, 1] - g[:, 0]) > 2 * tol
    # a wide gap only matters if its tol-shrunk core meets the target
    core_lo = g[wide, 0] + tol
    core_hi = g[wide, 1] - tol
    hit = (core_hi > target.lo) & (core_lo < target.hi)
    return not bool(np.any(hit))


def hausdorff(a: IntervalSet, b: IntervalSet) -> float:
    """Hausdorff distance between two nonempty interval unions."""
    if not a or not b:
        raise EmptySetError("Hausdorff distance needs nonempty sets")
    return max(_directed(a, b), _directed(b, a))


def _directed(a: IntervalSet, b: IntervalSet) -> float:
    # sup over x in a of dist(x, b); the sup is reached at an endpoint of a
    # or at a point of a sitting in the middle of a gap of b
    pts = [a.lo, a.hi]
    if len(b) > 1:
        mids = 0.5 * (b.hi[:-1] + b.lo[1:])
        inside = _point_in(a, mids)
        pts.append(mids[inside])
    x = np.concatenate(pts)
    return float(np.max(_dist_to(b, x)))


def _point_in(a: IntervalSet, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(a.lo, x, side="right") - 1
    ok = idx >= 0
    res = np.zeros(x.shape, dtype=bool)
    res[ok] = x[ok] <= a.hi[idx[ok]]
    return res


def _dist_to(b: IntervalSet, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(b.lo, x, side="right") - 1
    d = np.full(x.shape, np.inf)
    left = idx >= 0
    d[left] = np.maximum(x[left] - b.hi[idx[left]], 0.0)
    right = idx + 1 < len(b)
    d[right] = np.minimum(d[right], b.lo[idx[right] + 1] - x[right])
    return np.maximum(d, 0.0)


def contains_points(a: IntervalSet, x: Sequence[float] | np.ndarray) -> np.ndarray:
    return _point_in(a, np.asarray(x, dtype=float))
