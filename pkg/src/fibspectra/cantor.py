"""Thickness, Newhouse-type sum checks and box-counting dimension.

All quantities are computed on finite unions of closed intervals, which is
what the spectral approximants are.  For such a set the thickness is

    tau = sup over gap orderings of min over gaps of |bridge| / |gap|,

where the bridges of a gap are the pieces of the hull between it and the
nearest gaps removed before it.  Removing gaps by decreasing length realizes
the supremum; :func:`thickness_bruteforce` checks that claim by enumeration.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .intervals import EmptySetError, Interval, IntervalSet, diameter, gap_array, hull, largest_gap

INF = math.inf
# box edges closer than this (relative to the box size) to a grid line snap to it
_SNAP = 1e-9


def _json_num(x: float):
    return "inf" if x == INF else x


def _from_json_num(x) -> float:
    return INF if x == "inf" else float(x)


@dataclass(frozen=True)
class ThicknessReport:
    """Thickness together with the presentation that realized it.

    ``presentation`` lists gap indices (left-to-right numbering) in removal
    order; ``per_gap_ratios`` holds ``(gap, left_ratio, right_ratio)`` in the
    same order.
    """

    tau: float
    presentation: tuple[int, ...] = ()
    per_gap_ratios: tuple[tuple[Interval, float, float], ...] = ()

    def to_json(self) -> dict:
        return {
            "tau": _json_num(self.tau),
            "presentation": list(self.presentation),
            "per_gap_ratios": [[g.lo, g.hi, l, r] for g, l, r in self.per_gap_ratios],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ThicknessReport":
        return cls(
            tau=_from_json_num(obj["tau"]),
            presentation=tuple(int(i) for i in obj["presentation"]),
            per_gap_ratios=tuple((Interval(lo, hi), float(l), float(r))
                                 for lo, hi, l, r in obj["per_gap_ratios"]),
        )


@dataclass(frozen=True)
class DimensionEstimate:
    """Box counts ``N(eps)`` and their log-log least-squares fit."""

    scales: tuple[float, ...]
    counts: tuple[int, ...]
    slope: float
    intercept: float
    r2: float
    notes: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "scales": list(self.scales),
            "counts": list(self.counts),
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DimensionEstimate":
        return cls(tuple(float(s) for s in obj["scales"]), tuple(int(c) for c in obj["counts"]),
                   float(obj["slope"]), float(obj["intercept"]), float(obj["r2"]),
                   tuple(obj.get("notes", ())))


# -- thickness ----------------------------------------------------------------

def _ratios_for_order(lo: float, hi: float, g: np.ndarray, order) -> list[tuple[int, float, float]]:
    """Bridge/gap ratios when gaps are removed in ``order``."""
    removed: list[int] = []
    out = []
    for i in order:
        j = bisect.bisect_left(removed, i)
        left_end = g[removed[j - 1], 1] if j > 0 else lo
        right_end = g[removed[j], 0] if j < len(removed) else hi
        width = g[i, 1] - g[i, 0]
        out.append((int(i), (g[i, 0] - left_end) / width, (right_end - g[i, 1]) / width))
        removed.insert(j, i)
    return out


def _report(g: np.ndarray, rows) -> ThicknessReport:
    tau = min(min(l, r) for _, l, r in rows)
    return ThicknessReport(
        tau=float(tau),
        presentation=tuple(i for i, _, _ in rows),
        per_gap_ratios=tuple((Interval(float(g[i, 0]), float(g[i, 1])), float(l), float(r))
                             for i, l, r in rows),
    )


def thickness(a: IntervalSet) -> ThicknessReport:
    """Thickness of a finite union via the decreasing-gap-length presentation.

    Ties between equal gaps are broken left to right.  A single interval has
    no gaps and gets ``tau = inf``.

    Raises
    ------
    EmptySetError
        If ``a`` is empty.
    """
    h = hull(a)
    g = gap_array(a)
    if not len(g):
        return ThicknessReport(INF)
    # stable sort on -length keeps equal gaps in left-to-right order
    order = np.argsort(-(g[:, 1] - g[:, 0]), kind="stable")
    return _report(g, _ratios_for_order(h.lo, h.hi, g, order))


def thickness_bruteforce(a: IntervalSet, max_gaps: int = 7) -> ThicknessReport:
    """Exact thickness by maximizing over every gap ordering.

    Among optimal orderings the lexicographically first one is reported.
    """
    h = hull(a)
    g = gap_array(a)
    if len(g) > max_gaps:
        raise ValueError(f"{len(g)} gaps exceed max_gaps={max_gaps}")
    if not len(g):
        return ThicknessReport(INF)
    best = None
    best_tau = -INF
    for order in itertools.permutations(range(len(g))):
        rows = _ratios_for_order(h.lo, h.hi, g, order)
        tau = min(min(l, r) for _, l, r in rows)
        if tau > best_tau:
            best, best_tau = rows, tau
    return _report(g, best)


def newhouse_sum_check(c: IntervalSet, k: IntervalSet) -> bool:
    """Sufficient test for ``c + k`` to fill ``[min c + min k, max c + max k]``.

    True iff ``tau(c) * tau(k) > 1`` and each set's largest gap is at most
    the other's diameter.  An infinite thickness times zero counts as failing.
    """
    if not c or not k:
        return False
    tc, tk = thickness(c).tau, thickness(k).tau
    if (tc == INF and tk == 0) or (tk == INF and tc == 0):
        prod_ok = False
    else:
        prod_ok = tc * tk > 1
    return bool(prod_ok and largest_gap(c) <= diameter(k) and largest_gap(k) <= diameter(c))


def central_cantor(level: int, gap_fraction: float = 1 / 3,
                   interval: Interval = Interval(0.0, 1.0)) -> IntervalSet:
    """Level-``level`` stage of the symmetric Cantor set removing middle fractions.

    ``gap_fraction = 1/3`` gives the middle-thirds set, ``1/5`` the
    middle-fifth set (thickness 2).
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if not 0 < gap_fraction < 1:
        raise ValueError("gap_fraction must lie in (0, 1)")
    keep = 0.5 * (1 - gap_fraction)
    pieces = [(interval.lo, interval.hi)]
    for _ in range(level):
        nxt = []
        for lo, hi in pieces:
            w = (hi - lo) * keep
            nxt.extend([(lo, lo + w), (hi - w, hi)])
        pieces = nxt
    return IntervalSet(pieces)


# -- box counting ---------------------------------------------------------------

def _snap(x: np.ndarray) -> np.ndarray:
    r = np.round(x)
    return np.where(np.abs(x - r) < _SNAP, r, x)


def box_count(a: IntervalSet, eps: float, anchor: float | None = None) -> int:
    """Number of grid boxes ``[anchor + j eps, anchor + (j+1) eps]`` meeting ``a``.

    A component touching a grid line only from one side is charged to the
    box it extends into; degenerate components count once.
    """
    if not a:
        return 0
    if not eps > 0:
        raise ValueError("eps must be positive")
    anchor = hull(a).lo if anchor is None else anchor
    u = _snap((a.lo - anchor) / eps)
    v = _snap((a.hi - anchor) / eps)
    first = np.floor(u).astype(np.int64)
    last = np.maximum(first, np.ceil(v).astype(np.int64) - 1)
    # intervals are sorted, so a box can only be shared with earlier ones
    prev = np.concatenate([[first[0] - 1], np.maximum.accumulate(last)[:-1]])
    fresh = last - np.maximum(first - 1, prev)
    return int(np.clip(fresh, 0, None).sum())


def box_dimension(a: IntervalSet, scale_lo: float, scale_hi: float,
                  n_scales: int) -> DimensionEstimate:
    """Slope of ``log N(eps)`` against ``log(1/eps)`` over geometric scales.

    Boxes are aligned to a grid anchored at the hull's left end.  Counts are
    exactly monotone when consecutive scales divide each other (nested
    grids); for other ratios an anchored grid can wiggle by a box or two.

    Raises
    ------
    ValueError
        For a degenerate scale range or fewer than three scales.
    """
    if n_scales < 3:
        raise ValueError("n_scales must be >= 3")
    if not (0 < scale_lo < scale_hi):
        raise ValueError("need 0 < scale_lo < scale_hi")
    d = diameter(a)
    if scale_hi > d * (1 + 1e-12):
        raise ValueError(f"scale_hi={scale_hi} exceeds the diameter {d}")
    scales = np.geomspace(scale_hi, scale_lo, n_scales)
    counts = np.array([box_count(a, e) for e in scales])
    x = np.log(1 / scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    notes = ()
    if np.any(np.diff(counts) < 0):
        notes = ("counts not monotone across non-nested grids",)
    return DimensionEstimate(tuple(float(s) for s in scales), tuple(int(c) for c in counts),
                             float(slope), float(intercept), r2, notes)


__all__ = [
    "INF", "ThicknessReport", "DimensionEstimate", "thickness", "thickness_bruteforce",
    "newhouse_sum_check", "central_cantor", "box_count", "box_dimension", "EmptySetError",
]
