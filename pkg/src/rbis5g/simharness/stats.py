"""Series statistics in the shape of the skew and offset result tables."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from rbis5g.clockcore import PS_PER_NS, TimeSpan
from rbis5g.errors import PeriodAssociationError

MIN_COVERAGE_SAMPLES = 100


@dataclass(frozen=True)
class StatsSummary:
    median: float
    mean: float
    sigma: float
    two_sigma: float
    three_sigma: float
    count: int
    unit: str

    def rounded(self, digits: int = 4) -> tuple[float, float, float, float, float]:
        return tuple(round(v, digits) for v in
                     (self.median, self.mean, self.sigma, self.two_sigma, self.three_sigma))


def stats_summary(series, unit: str) -> StatsSummary:
    """Lower median, mean and population standard deviation of ``series``."""
    values = [float(v) for v in series]
    if not values:
        raise ValueError("stats_summary needs a non-empty series")
    sigma = statistics.pstdev(values)
    return StatsSummary(
        median=float(statistics.median_low(values)),
        mean=statistics.fmean(values),
        sigma=sigma,
        two_sigma=2 * sigma,
        three_sigma=3 * sigma,
        count=len(values),
        unit=unit,
    )


@dataclass(frozen=True)
class EdgeMeasurement:
    theta_measured: TimeSpan
    at_true_time: object  # Instant of the master edge

    @property
    def theta_ns(self) -> float:
        return self.theta_measured.ps / PS_PER_NS


def measure_edge_offset(master_edge, slave_edge, scope_jitter_sigma: TimeSpan, rng,
                        edge_period: TimeSpan | None = None,
                        scope_quantum: TimeSpan | None = None) -> EdgeMeasurement:
    """Signed slave-minus-master edge time as an oscilloscope would report it.

    One Gaussian draw with ``scope_jitter_sigma`` is added. A non-zero
    ``scope_quantum`` rounds the reading to the scope's sample grid.
    """
    diff = slave_edge.ps - master_edge.ps
    if edge_period is not None and 2 * abs(diff) >= edge_period.ps:
        raise PeriodAssociationError(
            f"edges {diff} ps apart do not belong to the same {edge_period.ps} ps period"
        )
    theta = diff
    if scope_jitter_sigma.ps:
        theta += int(round(rng.normal(0.0, scope_jitter_sigma.ps)))
    if scope_quantum is not None and scope_quantum.ps:
        q = scope_quantum.ps
        theta = (2 * theta + q) // (2 * q) * q
    return EdgeMeasurement(TimeSpan(theta), master_edge)


def coverage_check(series) -> tuple[float, float, float]:
    """Fractions of samples within mean +- 1, 2 and 3 population sigma.

    Accepts :class:`EdgeMeasurement` objects or plain numbers. A zero sigma
    counts every sample as inside.
    """
    values = [s.theta_measured.ps if isinstance(s, EdgeMeasurement) else s for s in series]
    if len(values) < MIN_COVERAGE_SAMPLES:
        raise ValueError(f"coverage_check needs >= {MIN_COVERAGE_SAMPLES} samples, got {len(values)}")
    values = [float(v) for v in values]
    mean = statistics.fmean(values)
    sigma = statistics.pstdev(values)
    n = len(values)
    if sigma == 0.0:
        return (1.0, 1.0, 1.0)
    return tuple(sum(1 for v in values if abs(v - mean) <= k * sigma) / n for k in (1, 2, 3))
