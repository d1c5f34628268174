import csv
import statistics
from pathlib import Path

import numpy as np
import pytest

from rbis5g.clockcore import Instant, TimeSpan
from rbis5g.errors import PeriodAssociationError
from rbis5g.simharness import coverage_check, measure_edge_offset, stats_summary

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture():
    with open(FIXTURES / "skew_n1024.csv") as fh:
        return [float(r["skew_ppm"]) for r in csv.DictReader(fh)]


def test_small_series_example():
    s = stats_summary([0, 0, 1, 1], "ppm")
    assert (s.median, s.mean, s.sigma, s.two_sigma, s.three_sigma) == (0, 0.5, 0.5, 1.0, 1.5)
    assert s.count == 4 and s.unit == "ppm"


def test_constant_series():
    s = stats_summary([1.36] * 10, "ppm")
    assert s.median == s.mean == 1.36 and s.sigma == 0.0


def test_empty_series_rejected():
    with pytest.raises(ValueError):
        stats_summary([], "ns")


def test_fixture_matches_independent_recomputation():
    values = np.array(load_fixture())
    unit = np.loadtxt(FIXTURES / "unit_series.txt")
    assert len(values) == len(unit) == 1000
    assert abs(unit.mean()) < 1e-12 and abs(unit.std() - 1) < 1e-12
    assert values.mean() == pytest.approx(1.3604, abs=1e-9)
    assert values.std() == pytest.approx(0.32816, abs=1e-9)
    s = stats_summary(values, "ppm")
    assert s.mean == pytest.approx(values.mean(), abs=1e-12)
    assert s.sigma == pytest.approx(values.std(), abs=1e-12)
    assert s.median == np.sort(values)[499]


def test_coverage_gaussian():
    x = np.random.default_rng(1).normal(size=100_000)
    c1, c2, c3 = coverage_check(x.tolist())
    assert c1 == pytest.approx(0.6827, abs=0.01)
    assert c2 == pytest.approx(0.9545, abs=0.005)
    assert c3 == pytest.approx(0.9973, abs=0.002)


def test_coverage_uniform():
    x = np.random.default_rng(2).uniform(size=100_000)
    assert coverage_check(x.tolist())[0] == pytest.approx(1 / 3**0.5, abs=0.01)


def test_coverage_degenerate_and_short():
    assert coverage_check([5] * 100) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        coverage_check([0.0] * 99)


def test_edge_measurement_sign_and_noise():
    rng = np.random.default_rng(0)
    m = measure_edge_offset(Instant(1000), Instant(3690), TimeSpan(0), rng)
    assert m.theta_measured == TimeSpan(2690) and m.theta_ns == 2.69
    draws = [measure_edge_offset(Instant(0), Instant(0), TimeSpan(15_540), rng).theta_measured.ps
             for _ in range(20_000)]
    assert statistics.pstdev(draws) == pytest.approx(15_540, rel=0.03)


def test_edge_quantum():
    m = measure_edge_offset(Instant(0), Instant(1_249), TimeSpan(0), None, scope_quantum=TimeSpan(500))
    assert m.theta_measured == TimeSpan(1_000)


def test_edge_period_association():
    period = TimeSpan.from_ms(1)
    with pytest.raises(PeriodAssociationError):
        measure_edge_offset(Instant(0), Instant(period.ps // 2), TimeSpan(0), None, period)
    measure_edge_offset(Instant(0), Instant(period.ps // 2 - 1), TimeSpan(0), None, period)


def test_constant_small_series():
    s = stats_summary([5, 5, 5], "ns")
    assert (s.median, s.mean, s.sigma) == (5, 5, 0)


def test_edge_late_slave_example():
    m = measure_edge_offset(Instant(10**9), Instant(10**9 + 4800), TimeSpan(0), None)
    assert m.theta_ns == 4.8


def test_edges_a_full_period_apart():
    period = TimeSpan.from_ms(10)
    with pytest.raises(PeriodAssociationError):
        measure_edge_offset(Instant(0), Instant(period.ps), TimeSpan(0), None, period)
