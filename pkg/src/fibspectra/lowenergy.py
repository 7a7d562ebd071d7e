"""Low-energy structure of the spectrum below ``E_0 = 24 / l_a^2``.

The pipeline mirrors the strong-coupling argument at finite level: a band
must exist below ``E_0/2``; the box-counting slope of the spectrum in
``[0, E_0]`` is estimated; and the measure of the ``d``-fold sum inside
``[0, E_0]`` is tracked across levels.  A slope below ``1/d`` is the
mechanism that forces the sum to have measure zero in the limit; at finite
level only the downward trend of the measure can be shown.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .cantor import DimensionEstimate, box_dimension
from .intervals import Interval, IntervalSet, diameter, measure, minkowski_power
from .spectrum import DEFAULT_TOL_E, approximant, rayleigh_bound
from .transfer import Model, invariant

log = logging.getLogger(__name__)

FIRST_LEVEL = 4
# box scales relative to the diameter of the set being measured
SCALE_LO_REL = 1e-4
SCALE_HI_REL = 1e-1
N_SCALES = 12
_INVARIANT_SAMPLES = 5


class LowEnergyError(RuntimeError):
    pass


@dataclass(frozen=True)
class LowEnergyReport:
    """Finite-level low-energy data for one coupling.

    ``e0_used`` differs from ``e0`` only when a degenerate spectral point
    sat on the cutoff and the cutoff was nudged left past it.
    """

    lam: float
    e0: float
    witness_band: Interval
    dim_estimate: DimensionEstimate
    sum_measure_by_level: tuple[tuple[int, float], ...]
    invariant_floor: float
    level: int
    d: int = 2
    e0_used: float | None = None
    isolated_points: tuple[float, ...] = ()
    band_count: int = 0
    notes: tuple[str, ...] = field(default=())
    sum_resolution_by_level: tuple[float, ...] = ()

    @property
    def below_threshold(self) -> bool:
        return self.dim_estimate.slope < 1.0 / self.d

    def measures_nonincreasing(self) -> bool:
        """Level-to-level monotonicity, up to the per-level edge resolution."""
        m = [x for _, x in self.sum_measure_by_level]
        r = self.sum_resolution_by_level or (0.0,) * len(m)
        return all(m1 <= m0 + r0 + r1 for m0, m1, r0, r1 in zip(m, m[1:], r, r[1:]))

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "e0": self.e0,
            "e0_used": self.e0_used,
            "level": self.level,
            "d": self.d,
            "witness_band": self.witness_band.as_list(),
            "dim_estimate": self.dim_estimate.to_json(),
            "sum_measure_by_level": [[k, m] for k, m in self.sum_measure_by_level],
            "sum_resolution_by_level": list(self.sum_resolution_by_level),
            "invariant_floor": self.invariant_floor,
            "isolated_points": list(self.isolated_points),
            "band_count": self.band_count,
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LowEnergyReport":
        return cls(
            lam=float(obj["lambda"]),
            e0=float(obj["e0"]),
            witness_band=Interval(*obj["witness_band"]),
            dim_estimate=DimensionEstimate.from_json(obj["dim_estimate"]),
            sum_measure_by_level=tuple((int(k), float(m)) for k, m in obj["sum_measure_by_level"]),
            invariant_floor=float(obj["invariant_floor"]),
            level=int(obj["level"]),
            d=int(obj.get("d", 2)),
            e0_used=obj.get("e0_used"),
            isolated_points=tuple(obj.get("isolated_points", ())),
            band_count=int(obj.get("band_count", 0)),
            notes=tuple(obj.get("notes", ())),
            sum_resolution_by_level=tuple(float(x) for x in obj.get("sum_resolution_by_level", ())),
        )


def isolated_point_scan(s: IntervalSet, e0: float, tol: float) -> list[float]:
    """Degenerate pieces (width < 2 tol) of ``s & [0, e0]`` sitting on the cutoff.

    Such a point appears when ``e0`` lands on the left edge of a band; it is
    an artifact of the cutoff rather than a feature of the spectrum.
    """
    cut = s.clip(0.0, e0)
    pts = [float(lo) for lo, hi in cut.array
           if hi - lo < 2 * tol and hi >= e0 - 2 * tol]
    return pts


def _invariant_floor(m: Model, s: IntervalSet) -> float:
    if not s:
        return float("nan")
    frac = np.linspace(0.0, 1.0, _INVARIANT_SAMPLES)
    E = (s.lo[:, None] + (s.hi - s.lo)[:, None] * frac[None, :]).ravel()
    return float(np.min(invariant(m, E)))


def low_energy_report(m: Model | None, lam: float, k: int, tol: float = DEFAULT_TOL_E,
                      d: int = 2, threads: int = 1, scale_lo_rel: float = SCALE_LO_REL,
                      scale_hi_rel: float = SCALE_HI_REL, n_scales: int = N_SCALES,
                      first_level: int = FIRST_LEVEL) -> LowEnergyReport:
    """Witness band, dimension estimate and ``d``-fold sum measures on ``[0, E_0]``.

    Parameters
    ----------
    m : Model or None
        Canonical model; ``None`` builds ``Model.canonical(lam)``.
    lam : float
        Coupling, must match ``m`` when both are given.
    k : int
        Top approximant level, ``k >= 4``; sums are tracked for
        ``first_level..k``.
    d : int
        Number of summands; the dimension threshold is ``1/d``.

    Raises
    ------
    LowEnergyError
        If the approximant has no band in ``[0, E_0/2]``.
    """
    if m is None:
        m = Model.canonical(lam)
    if not m.is_canonical:
        raise ValueError("low_energy_report needs a canonical model")
    if m.coupling != float(lam):
        raise ValueError(f"model coupling {m.coupling} does not match lambda {lam}")
    if k < first_level:
        raise ValueError(f"level k must be >= {first_level}")
    if d < 2:
        raise ValueError("d must be >= 2")
    _, e0 = rayleigh_bound(m.l_a)
    rng = Interval(0.0, e0)

    sets = {j: approximant(m, j, rng, tol, threads=threads).set for j in range(first_level, k + 1)}
    top = sets[k]
    notes = []
    iso = isolated_point_scan(top, e0, tol)
    e0_used = e0
    if iso:
        e0_used = min(iso) - 2 * tol
        notes.append(f"cutoff nudged from {e0} to {e0_used} past isolated point(s) {iso}")

    witness = top.clip(0.0, e0 / 2)
    if not witness:
        raise LowEnergyError("finite-level approximant missed the low band; increase k")
    w = witness.array[0]

    window = top.clip(0.0, e0_used)
    diam = diameter(window)
    if diam > 0:
        dim = box_dimension(window, diam * scale_lo_rel, diam * scale_hi_rel, n_scales)
    else:
        dim = DimensionEstimate((), (), 0.0, 0.0, 1.0, ("single point: slope set to 0",))

    sums, res = [], []
    for j in range(first_level, k + 1):
        a = sets[j].clip(0.0, e0_used)
        s = minkowski_power(a, d).clip(0.0, e0_used)
        sums.append((j, measure(s)))
        # each summand edge is good to tol, so each sum edge to d * tol
        res.append(2 * d * tol * len(s))

    return LowEnergyReport(
        lam=float(lam), e0=e0, witness_band=Interval(w[0], w[1]), dim_estimate=dim,
        sum_measure_by_level=tuple(sums), invariant_floor=_invariant_floor(m, window),
        level=k, d=d, e0_used=e0_used, isolated_points=tuple(iso), band_count=len(window),
        notes=tuple(notes), sum_resolution_by_level=tuple(res),
    )


def lambda_sweep(lams, k: int, tol: float = DEFAULT_TOL_E, d: int = 2,
                 threads: int = 1) -> tuple[list[LowEnergyReport], float | None]:
    """Reports for each coupling and the empirical threshold.

    The threshold is the smallest swept ``lam`` from which on every slope
    stays below ``1/d``; ``None`` if the largest coupling is still above.
    It is an empirical reading of the sweep, not a proven constant.
    """
    lams = sorted(float(x) for x in lams)
    reports = [low_energy_report(None, lam, k, tol, d, threads) for lam in lams]
    thr = None
    for rep in reversed(reports):
        if not rep.below_threshold:
            break
        thr = rep.lam
    return reports, thr
