import functools

import pytest

from fibspectra import (
    Interval, IntervalSet, LowEnergyReport, Model, isolated_point_scan, lambda_sweep,
    low_energy_report,
)
from fibspectra import lowenergy
from fibspectra.lowenergy import LowEnergyError

RECORDED_SLOPE_30 = 0.1869


@functools.lru_cache(maxsize=None)
def report(lam, k=10, d=2):
    return low_energy_report(None, lam, k, d=d)


def test_free_case_calibration():
    r = report(0.0, 6)
    assert r.witness_band == Interval(0.0, 12.0)
    assert r.dim_estimate.slope == pytest.approx(1, abs=0.02)
    assert all(m == pytest.approx(24.0, abs=1e-9) for _, m in r.sum_measure_by_level)
    assert r.invariant_floor >= -1e-9
    assert r.e0 == 24.0 and r.e0_used == 24.0 and not r.isolated_points


def test_isolated_point_scan_examples():
    assert isolated_point_scan(IntervalSet([[0, 1], [24, 24]]), 24.0, 1e-9) == [24.0]
    assert isolated_point_scan(IntervalSet([[0, 24]]), 24.0, 1e-9) == []
    # a degenerate piece away from the cutoff is not a cutoff artifact
    assert isolated_point_scan(IntervalSet([[0, 1], [5, 5]]), 24.0, 1e-9) == []


def test_strong_coupling_report():
    r = report(30.0)
    assert r.level == 10 and r.d == 2
    # recorded at level 10, default tolerance
    assert r.dim_estimate.slope == pytest.approx(RECORDED_SLOPE_30, abs=0.05)
    assert r.below_threshold
    assert not r.isolated_points
    assert [k for k, _ in r.sum_measure_by_level] == list(range(4, 11))
    assert r.measures_nonincreasing()
    m = dict(r.sum_measure_by_level)
    # small slope forces the sum measure down strictly
    assert all(m[k] < m[k - 2] for k in range(6, 11))
    assert 0.0 <= r.witness_band.lo <= r.witness_band.hi <= 12.0


@pytest.mark.parametrize("lam", [0.0, 1.0, 4.0, 30.0])
def test_witness_and_invariant_floor(lam):
    r = report(lam, 10) if lam else report(lam, 6)
    assert r.witness_band.hi <= r.e0 / 2
    assert r.invariant_floor >= -1e-9


def test_d_three_variant():
    r2, r3 = report(30.0, 8), report(30.0, 8, 3)
    assert r3.d == 3
    assert r3.below_threshold == (r3.dim_estimate.slope < 1 / 3)
    m2, m3 = dict(r2.sum_measure_by_level), dict(r3.sum_measure_by_level)
    # three summands cover at least as much of [0, E_0] as two
    assert all(m3[k] >= m2[k] for k in m2)
    assert r3.measures_nonincreasing()


def test_missing_witness_raises(monkeypatch):
    real = lowenergy.approximant

    def hollow(m, k, rng, tol, threads=1):
        spec = real(m, k, rng, tol, threads=threads)
        return type(spec)(spec.set.clip(20.0, 24.0), spec.level, spec.variable, spec.model,
                          spec.e_max, spec.tol)

    monkeypatch.setattr(lowenergy, "approximant", hollow)
    with pytest.raises(LowEnergyError, match="missed the low band"):
        low_energy_report(None, 1.0, 4)


def test_validation():
    with pytest.raises(ValueError):
        low_energy_report(None, 1.0, 3)
    with pytest.raises(ValueError):
        low_energy_report(Model.canonical(2.0), 1.0, 5)
    with pytest.raises(ValueError):
        low_energy_report(None, 1.0, 5, d=1)


def test_report_json_round_trip():
    r = report(30.0)
    assert LowEnergyReport.from_json(r.to_json()) == r


def test_measure_resolution_rule():
    base = report(0.0, 6)
    wobble = LowEnergyReport(**{**base.__dict__, "sum_measure_by_level": ((4, 1.0), (5, 1.0 + 1e-9)),
                                "sum_resolution_by_level": (1e-9, 1e-9)})
    assert wobble.measures_nonincreasing()
    jump = LowEnergyReport(**{**wobble.__dict__, "sum_measure_by_level": ((4, 1.0), (5, 1.1))})
    assert not jump.measures_nonincreasing()


def test_lambda_sweep_threshold():
    reports, thr = lambda_sweep([30.0, 0.0], 6)
    assert [r.lam for r in reports] == [0.0, 30.0]
    assert not reports[0].below_threshold and reports[1].below_threshold
    assert thr == 30.0
    _, none = lambda_sweep([0.0], 5)
    assert none is None
