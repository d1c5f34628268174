"""Picosecond time arithmetic and simulated drifting clocks.

All time quantities are exact integer picoseconds. ``Instant`` is a point on
some time axis (true time or a device's local time), ``TimeSpan`` a signed
duration. A :class:`SimulatedClock` maps true simulation time onto a device's
local time through an affine law (initial offset plus skew) with optional
Gaussian read jitter, read quantization and a random-walk skew.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

import numpy as np

from rbis5g.errors import TimeRangeError

PS_PER_NS = 1_000
PS_PER_US = 1_000_000
PS_PER_MS = 1_000_000_000
PS_PER_S = 1_000_000_000_000

# 96-bit signed range; far beyond the +-1e6 s the simulator ever needs.
MAX_PS = 2**95 - 1


def round_div(num: int, den: int) -> int:
    """Integer division rounded to nearest, ties toward +infinity."""
    if den < 0:
        num, den = -num, -den
    return (2 * num + den) // (2 * den)


def _check_range(ps: int) -> None:
    if not -MAX_PS <= ps <= MAX_PS:
        raise TimeRangeError(f"{ps} ps is outside the representable range")


def _scaled(value, scale: int) -> int:
    if isinstance(value, bool):
        raise TypeError("bool is not a time value")
    if isinstance(value, int):
        return value * scale
    if isinstance(value, float) and not math.isfinite(value):
        raise ValueError(f"non-finite time value {value!r}")
    return int((Decimal(str(value)) * scale).to_integral_value())


@dataclass(frozen=True, order=True, slots=True)
class TimeSpan:
    """Signed duration in integer picoseconds."""

    ps: int

    def __post_init__(self):
        if not isinstance(self.ps, int) or isinstance(self.ps, bool):
            raise TypeError(f"TimeSpan needs an int picosecond count, got {self.ps!r}")
        _check_range(self.ps)

    @classmethod
    def from_ps(cls, ps) -> TimeSpan:
        return cls(_scaled(ps, 1))

    @classmethod
    def from_ns(cls, ns) -> TimeSpan:
        return cls(_scaled(ns, PS_PER_NS))

    @classmethod
    def from_us(cls, us) -> TimeSpan:
        return cls(_scaled(us, PS_PER_US))

    @classmethod
    def from_ms(cls, ms) -> TimeSpan:
        return cls(_scaled(ms, PS_PER_MS))

    @classmethod
    def from_seconds(cls, s) -> TimeSpan:
        return cls(_scaled(s, PS_PER_S))

    @property
    def ns(self) -> float:
        return self.ps / PS_PER_NS

    @property
    def seconds(self) -> float:
        return self.ps / PS_PER_S

    def __add__(self, other):
        if isinstance(other, TimeSpan):
            return TimeSpan(self.ps + other.ps)
        if isinstance(other, Instant):
            return Instant(self.ps + other.ps)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, TimeSpan):
            return TimeSpan(self.ps - other.ps)
        return NotImplemented

    def __neg__(self):
        return TimeSpan(-self.ps)

    def __abs__(self):
        return TimeSpan(abs(self.ps))

    def __mul__(self, k):
        if isinstance(k, int) and not isinstance(k, bool):
            return TimeSpan(self.ps * k)
        return NotImplemented

    __rmul__ = __mul__

    def __bool__(self):
        return self.ps != 0

    def __repr__(self):
        return f"TimeSpan({self.ps} ps)"


@dataclass(frozen=True, order=True, slots=True)
class Instant:
    """Point in time, picoseconds since the simulation epoch (true time 0)."""

    ps: int

    def __post_init__(self):
        if not isinstance(self.ps, int) or isinstance(self.ps, bool):
            raise TypeError(f"Instant needs an int picosecond count, got {self.ps!r}")
        _check_range(self.ps)

    @classmethod
    def from_ns(cls, ns) -> Instant:
        return cls(_scaled(ns, PS_PER_NS))

    @classmethod
    def from_ms(cls, ms) -> Instant:
        return cls(_scaled(ms, PS_PER_MS))

    @classmethod
    def from_seconds(cls, s) -> Instant:
        return cls(_scaled(s, PS_PER_S))

    @property
    def seconds(self) -> float:
        return self.ps / PS_PER_S

    def __add__(self, other):
        if isinstance(other, TimeSpan):
            return Instant(self.ps + other.ps)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Instant):
            return TimeSpan(self.ps - other.ps)
        if isinstance(other, TimeSpan):
            return Instant(self.ps - other.ps)
        return NotImplemented

    def __repr__(self):
        return f"Instant({self.ps} ps)"


ZERO = TimeSpan(0)
EPOCH = Instant(0)


@dataclass(frozen=True)
class ClockParams:
    """Static description of a device oscillator.

    ``skew_ppm`` is the rate error in parts per million, positive meaning the
    clock runs fast. ``drift_random_walk_sigma`` is in ppm per sqrt(second).
    A zero ``timestamp_resolution`` disables read quantization.
    """

    initial_offset: TimeSpan = ZERO
    skew_ppm: float = 0.0
    timestamp_jitter_sigma: TimeSpan = ZERO
    drift_random_walk_sigma: float = 0.0
    timestamp_resolution: TimeSpan = ZERO

    def __post_init__(self):
        if not math.isfinite(self.skew_ppm):
            raise ValueError("skew_ppm must be finite")
        if self.skew_ppm <= -1e6:
            raise ValueError("skew_ppm <= -1e6 ppm would stop the clock")
        if self.timestamp_jitter_sigma.ps < 0:
            raise ValueError("timestamp_jitter_sigma must be >= 0")
        if not (math.isfinite(self.drift_random_walk_sigma) and self.drift_random_walk_sigma >= 0):
            raise ValueError("drift_random_walk_sigma must be finite and >= 0")
        if self.timestamp_resolution.ps < 0:
            raise ValueError("timestamp_resolution must be >= 0")


class SimulatedClock:
    """A drifting local clock driven by true simulation time.

    The deterministic part is affine, anchored at true time 0 where the clock
    reads ``initial_offset``. :meth:`advance_drift` re-anchors the map and
    perturbs the skew when a random walk is configured.

    Args:
        params: oscillator description.
        rng: ``numpy.random.Generator`` or anything ``default_rng`` accepts.
            All jitter and drift draws come from this single stream.
    """

    def __init__(self, params: ClockParams, rng=None):
        self.params = params
        self._rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self._anchor_true = 0
        self._anchor_local = params.initial_offset.ps
        self._set_skew(params.skew_ppm)

    def _set_skew(self, skew_ppm: float) -> None:
        self.skew_ppm = float(skew_ppm)
        num, den = Fraction(self.skew_ppm).as_integer_ratio()
        self._rate_num = num
        self._rate_den = den * 1_000_000

    def local_time_deterministic(self, true_t: Instant) -> Instant:
        """Affine local reading with no jitter and no quantization."""
        dt = true_t.ps - self._anchor_true
        return Instant(self._anchor_local + dt + round_div(dt * self._rate_num, self._rate_den))

    def local_time(self, true_t: Instant) -> Instant:
        """Timestamp a true instant with this clock.

        Consumes one Gaussian draw per call when jitter is configured.
        """
        ps = self.local_time_deterministic(true_t).ps
        sigma = self.params.timestamp_jitter_sigma.ps
        if sigma:
            ps += int(round(self._rng.normal(0.0, sigma)))
        res = self.params.timestamp_resolution.ps
        if res:
            ps = (ps // res) * res
        return Instant(ps)

    def local_time_exact(self, true_t) -> Fraction:
        """Unrounded deterministic reading at a possibly fractional true time (ps)."""
        dt = Fraction(true_t) - self._anchor_true
        return self._anchor_local + dt + dt * Fraction(self._rate_num, self._rate_den)

    def true_time_of_local_exact(self, local_t: Instant) -> Fraction:
        """Exact rational true time at which the deterministic map reads ``local_t``."""
        x = local_t.ps - self._anchor_local
        return self._anchor_true + Fraction(x * self._rate_den, self._rate_den + self._rate_num)

    def true_time_of_local(self, local_t: Instant) -> Instant:
        """Invert the deterministic map, rounded to the nearest picosecond."""
        x = local_t.ps - self._anchor_local
        return Instant(self._anchor_true + round_div(x * self._rate_den, self._rate_den + self._rate_num))

    def advance_drift(self, dt: TimeSpan) -> SimulatedClock:
        """Move the anchor forward by ``dt`` and apply one random-walk skew step.

        With a zero random-walk sigma the clock is left untouched. Returns the
        clock itself so calls can be chained.
        """
        if dt.ps <= 0:
            raise ValueError("advance_drift needs dt > 0")
        sigma = self.params.drift_random_walk_sigma
        if sigma == 0.0:
            return self
        new_anchor = self._anchor_true + dt.ps
        self._anchor_local = self.local_time_deterministic(Instant(new_anchor)).ps
        self._anchor_true = new_anchor
        step = self._rng.normal(0.0, sigma * math.sqrt(dt.ps / PS_PER_S))
        self._set_skew(self.skew_ppm + step)
        return self

    def __repr__(self):
        return f"SimulatedClock(skew_ppm={self.skew_ppm!r}, params={self.params!r})"
