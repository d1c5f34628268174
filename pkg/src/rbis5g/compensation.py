"""Propagation-delay compensation from Timing Advance values.

Timing Advance (TA) is the round-trip delay between gNB and UE expressed in
TA units. Half of it estimates the one-way delay of the SYNC broadcast, which
is removed from each device's reception timestamp so that both timestamps
refer to the common transmission instant.
"""

from __future__ import annotations

from dataclasses import dataclass

from rbis5g.clockcore import PS_PER_S, Instant, TimeSpan, round_div
from rbis5g.estimator import TimestampTuple

SPEED_OF_LIGHT = 299_792_458  # m/s


@dataclass(frozen=True)
class TimingAdvance:
    ta_units: int
    unit_duration: TimeSpan

    def __post_init__(self):
        if self.ta_units < 0:
            raise ValueError("ta_units must be >= 0")
        if self.unit_duration.ps <= 0:
            raise ValueError("unit_duration must be positive")

    @property
    def round_trip_delay(self) -> TimeSpan:
        return TimeSpan(self.ta_units * self.unit_duration.ps)


def propagation_delay(distance_m: float) -> TimeSpan:
    """Free-space one-way delay over ``distance_m`` metres, nearest picosecond."""
    if distance_m < 0:
        raise ValueError("distance must be >= 0")
    return TimeSpan(round(distance_m * PS_PER_S / SPEED_OF_LIGHT))


def timing_advance_for_distance(distance_m: float, unit_duration: TimeSpan) -> TimingAdvance:
    """TA the gNB would assign: round trip quantized to the nearest whole unit."""
    rtt = 2 * propagation_delay(distance_m).ps
    return TimingAdvance(round_div(rtt, unit_duration.ps), unit_duration)


def one_way_delay(ta: TimingAdvance) -> TimeSpan:
    return TimeSpan(round_div(ta.ta_units * ta.unit_duration.ps, 2))


def compensate_tuple(tup: TimestampTuple, ta_master: TimingAdvance,
                     ta_slave: TimingAdvance) -> TimestampTuple:
    """Shift each reception timestamp back by its own device's one-way delay."""
    return TimestampTuple(
        Instant(tup.t_master.ps - one_way_delay(ta_master).ps),
        Instant(tup.t_slave.ps - one_way_delay(ta_slave).ps),
    )
