"""Offset and skew estimation from master/slave timestamp tuples.

The offset of one SYNC event is the slave reading minus the master reading.
Skew samples are offset differences divided by the master-time interval, in
ppm. A moving average over the last N skew samples gives the filtered skew,
which is integrated forward from the last raw offset to predict the offset
at any later master time.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import NamedTuple

from rbis5g.clockcore import Instant, TimeSpan, round_div
from rbis5g.errors import OrderingError, UninitializedError

# Every finite double is num / 2**k, so a window of skew samples sums exactly
# as Python ints once scaled by 2**(largest k). The scale only ever grows.


class TimestampTuple(NamedTuple):
    """Master and slave readings of the same SYNC event."""

    t_master: Instant
    t_slave: Instant


class OffsetSample(NamedTuple):
    theta_hat: TimeSpan
    at_master_time: Instant


class SkewSample(NamedTuple):
    gamma_hat_ppm: float
    interval: TimeSpan


def offset_of(tup: TimestampTuple) -> OffsetSample:
    return OffsetSample(tup.t_slave - tup.t_master, tup.t_master)


def _skew_ppm(d_theta_ps: int, d_master_ps: int) -> float:
    # int / int is correctly rounded, so this is the exact ratio to double precision
    return (d_theta_ps * 1_000_000) / d_master_ps


def skew_of(prev: OffsetSample, cur: OffsetSample) -> SkewSample:
    """Skew between two consecutive offset samples, in ppm."""
    interval = cur.at_master_time.ps - prev.at_master_time.ps
    if interval <= 0:
        raise OrderingError(
            f"master time did not increase ({prev.at_master_time} -> {cur.at_master_time})"
        )
    return SkewSample(_skew_ppm(cur.theta_hat.ps - prev.theta_hat.ps, interval), TimeSpan(interval))


class SyncState:
    """Incremental servo state of one slave relative to its master.

    The filtered skew is the arithmetic mean of the skew window, computed from
    an exact running sum so that it is the correctly rounded mean of the window
    contents no matter how long the state has been running.

    Args:
        window_n: moving-average window size N (>= 1).
    """

    __slots__ = ("window_n", "filtered_skew_ppm", "tuple_count",
                 "_theta", "_t_master", "_window", "_exact_sum", "_shift")

    def __init__(self, window_n: int = 1024):
        if not isinstance(window_n, int) or window_n < 1:
            raise ValueError(f"window_n must be a positive int, got {window_n!r}")
        self.window_n = window_n
        self.filtered_skew_ppm = 0.0
        self.tuple_count = 0
        self._theta = 0
        self._t_master = None
        # (gamma_ppm, interval_ps, numerator, log2 denominator), oldest first
        self._window: deque[tuple[float, int, int, int]] = deque()
        # sum of the window in units of 2**-_shift
        self._exact_sum = 0
        self._shift = 0

    @property
    def initialized(self) -> bool:
        return self._t_master is not None

    @property
    def last_offset(self) -> OffsetSample | None:
        if self._t_master is None:
            return None
        return OffsetSample(TimeSpan(self._theta), Instant(self._t_master))

    @property
    def last_theta_ps(self) -> int | None:
        """Last raw offset as a plain int (cheap accessor for log replay)."""
        return None if self._t_master is None else self._theta

    @property
    def skew_window(self) -> tuple[SkewSample, ...]:
        return tuple(SkewSample(entry[0], TimeSpan(entry[1])) for entry in self._window)

    def update(self, tup: TimestampTuple) -> SyncState:
        """Feed one tuple; returns ``self``."""
        self.update_ps(tup.t_master.ps, tup.t_slave.ps)
        return self

    def update_ps(self, t_master_ps: int, t_slave_ps: int) -> None:
        """Same as :meth:`update` on raw picosecond integers (log replay path)."""
        theta = t_slave_ps - t_master_ps
        if self._t_master is not None:
            interval = t_master_ps - self._t_master
            if interval <= 0:
                raise OrderingError(
                    f"master time did not increase ({self._t_master} -> {t_master_ps} ps)"
                )
            gamma = ((theta - self._theta) * 1_000_000) / interval  # same as _skew_ppm, inlined
            num, den = gamma.as_integer_ratio()
            k = den.bit_length() - 1
            shift = self._shift
            total = self._exact_sum
            if k > shift:
                total <<= k - shift
                shift = self._shift = k
            window = self._window
            window.append((gamma, interval, num, k))
            total += num << (shift - k)
            if len(window) > self.window_n:
                _, _, old_num, old_k = window.popleft()
                total -= old_num << (shift - old_k)
            self._exact_sum = total
            self.filtered_skew_ppm = total / (len(window) << shift)
        self._theta = theta
        self._t_master = t_master_ps
        self.tuple_count += 1

    def _require(self):
        if self._t_master is None:
            raise UninitializedError("no timestamp tuple processed yet")

    def _rate(self):
        return self.filtered_skew_ppm.as_integer_ratio()

    def predict_offset(self, at_master_time: Instant) -> TimeSpan:
        """Last offset plus the filtered skew integrated up to ``at_master_time``."""
        self._require()
        num, den = self._rate()
        dt = at_master_time.ps - self._t_master
        return TimeSpan(self._theta + round_div(dt * num, den * 1_000_000))

    def local_time_of_master(self, master_t: Instant) -> Instant:
        """Slave-local time at which the master clock is predicted to read ``master_t``."""
        return Instant(master_t.ps + self.predict_offset(master_t).ps)

    def corrected_time_exact(self, slave_local_ps) -> Fraction:
        """Exact solution m of ``m = slave_local - predicted_offset(m)``."""
        self._require()
        num, den = self._rate()
        den *= 1_000_000
        # affine in m, so the fixed point has a closed form
        x = slave_local_ps - self._theta - self._t_master
        return self._t_master + Fraction(x * den, den + num)

    def corrected_local_time(self, slave_local: Instant) -> Instant:
        """Slave-local reading translated to master time, nearest picosecond."""
        exact = self.corrected_time_exact(slave_local.ps)
        return Instant(round_div(exact.numerator, exact.denominator))

    def copy(self) -> SyncState:
        other = SyncState(self.window_n)
        other.filtered_skew_ppm = self.filtered_skew_ppm
        other.tuple_count = self.tuple_count
        other._theta = self._theta
        other._t_master = self._t_master
        other._window = deque(self._window)
        other._exact_sum = self._exact_sum
        other._shift = self._shift
        return other

    def __repr__(self):
        return (f"SyncState(N={self.window_n}, tuples={self.tuple_count}, "
                f"last_offset={self.last_offset}, filtered_skew_ppm={self.filtered_skew_ppm!r})")


def update(state: SyncState, tup: TimestampTuple) -> SyncState:
    return state.update(tup)


def predict_offset(state: SyncState, at_master_time: Instant) -> TimeSpan:
    return state.predict_offset(at_master_time)


def corrected_local_time(state: SyncState, slave_local: Instant) -> Instant:
    return state.corrected_local_time(slave_local)


def replay(tuples, window_n: int) -> list[float]:
    """Filtered skew after every tuple of a log (0.0 while no skew sample exists)."""
    state = SyncState(window_n)
    out = []
    for t_m, t_s in tuples:
        state.update_ps(t_m.ps if isinstance(t_m, Instant) else t_m,
                        t_s.ps if isinstance(t_s, Instant) else t_s)
        out.append(state.filtered_skew_ppm)
    return out
