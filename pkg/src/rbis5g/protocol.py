"""SYNC / FOLLOW_UP message handling with SFN-identified SYNC events.

The gNB broadcast carries a 10-bit System Frame Number that advances once per
10 ms radio frame and wraps every 10.24 s. A SYNC is sent every ``stride``
frames, so event ``k`` carries SFN ``(k * stride) mod 1024``. Devices turn the
wrapping SFN back into an absolute event index (:class:`SfnTracker`): the first
SYNC is placed using the device's own clock, which must be within half a wrap
period of the master's time scale; later SYNCs are placed relative to the
previous one using elapsed local time.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction

from rbis5g.clockcore import Instant, TimeSpan
from rbis5g.errors import SfnAmbiguityError
from rbis5g.estimator import SyncState, TimestampTuple

SFN_MODULUS = 1024
SFN_WRAP_PERIOD = TimeSpan.from_ms(10240)
MAX_INITIAL_OFFSET = TimeSpan.from_ms(5120)
MIN_SYNC_PERIOD = TimeSpan.from_ms(5)
MAX_SYNC_PERIOD = TimeSpan.from_ms(160)

EventId = int


class Sfn(int):
    """System Frame Number, an int restricted to 0..1023."""

    def __new__(cls, value):
        v = super().__new__(cls, value)
        if not 0 <= v < SFN_MODULUS:
            raise ValueError(f"SFN must be in [0, {SFN_MODULUS - 1}], got {value!r}")
        return v


def sfn_of(event_id: EventId, stride: int) -> Sfn:
    return Sfn((event_id * stride) % SFN_MODULUS)


@dataclass(frozen=True)
class SyncEvent:
    sfn: Sfn
    # ground truth for the simulator; protocol code never reads it
    true_broadcast_time: Instant | None = field(default=None, compare=False)


@dataclass(frozen=True)
class FollowUp:
    """Master timestamps of a batch of SYNC events, ordered by event id."""

    entries: tuple[tuple[EventId, Instant], ...] = ()

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        for (id_a, ts_a), (id_b, ts_b) in zip(entries, entries[1:]):
            if id_b <= id_a:
                raise ValueError(f"FOLLOW_UP event ids not increasing: {id_a} then {id_b}")
            if ts_b <= ts_a:
                raise ValueError(f"FOLLOW_UP timestamps not increasing at event {id_b}")

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ProtocolConfig:
    sync_period: TimeSpan = TimeSpan.from_ms(10)
    followup_period: TimeSpan = TimeSpan.from_ms(100)
    sfn_wrap_period: TimeSpan = SFN_WRAP_PERIOD
    max_initial_offset: TimeSpan = MAX_INITIAL_OFFSET
    pending_capacity: int = 4096

    def __post_init__(self):
        if not MIN_SYNC_PERIOD <= self.sync_period <= MAX_SYNC_PERIOD:
            raise ValueError("sync_period must lie between 5 ms and 160 ms")
        if self.followup_period.ps <= 0:
            raise ValueError("followup_period must be positive")
        if self.sfn_wrap_period.ps <= 0 or self.sfn_wrap_period.ps % SFN_MODULUS:
            raise ValueError("sfn_wrap_period must be a positive multiple of 1024 ps")
        if self.sync_period.ps % self.frame_duration.ps:
            raise ValueError(
                "sync_period must be a whole number of radio frames "
                f"({self.frame_duration.ps / 1e9:g} ms) for the SFN to identify each SYNC"
            )
        if not 0 <= self.max_initial_offset.ps <= self.sfn_wrap_period.ps // 2:
            raise ValueError("max_initial_offset must not exceed half the SFN wrap period")
        if self.pending_capacity < 1:
            raise ValueError("pending_capacity must be >= 1")

    @property
    def frame_duration(self) -> TimeSpan:
        return TimeSpan(self.sfn_wrap_period.ps // SFN_MODULUS)

    @property
    def stride(self) -> int:
        """Radio frames between consecutive SYNC events."""
        return self.sync_period.ps // self.frame_duration.ps

    @property
    def expiry_horizon(self) -> TimeSpan:
        return TimeSpan(2 * self.followup_period.ps)


def nearest_event_index(observed: int, expected, stride: int) -> EventId:
    """Absolute event index carrying SFN ``observed`` that is closest to ``expected``.

    ``expected`` may be fractional. Raises :class:`SfnAmbiguityError` when two
    candidates are equally close or when no event can carry ``observed``.
    """
    g = math.gcd(stride, SFN_MODULUS)
    if observed % g:
        raise SfnAmbiguityError(f"SFN {observed} never occurs with stride {stride}")
    spacing = SFN_MODULUS // g
    base = (observed // g) * pow(stride // g, -1, spacing) % spacing if spacing > 1 else 0
    expected = Fraction(expected)
    m = math.floor((expected - base) / spacing)
    lower = base + m * spacing
    below = expected - lower
    above = spacing - below
    if below == above:
        raise SfnAmbiguityError(
            f"SFN {observed} is equidistant from events {lower} and {lower + spacing}"
        )
    return lower if below < above else lower + spacing


def unwrap_sfn(observed: int, last_event: EventId, stride: int, events_elapsed=1) -> EventId:
    """Recover the absolute event index of an observed SFN.

    The expectation is ``last_event + events_elapsed``. With
    ``events_elapsed == 0`` the call places an initial anchor and the result
    may lie on either side of ``last_event``; otherwise it must be strictly
    later than ``last_event``.
    """
    event_id = nearest_event_index(observed, Fraction(last_event) + Fraction(events_elapsed), stride)
    if events_elapsed and event_id <= last_event:
        raise SfnAmbiguityError(
            f"SFN {observed} resolves to event {event_id}, not after last event {last_event}"
        )
    return event_id


class SfnTracker:
    """Per-device SFN unwrapping anchored on the device's own clock."""

    def __init__(self, config: ProtocolConfig):
        self.config = config
        self.stride = config.stride
        self.last_event: EventId | None = None
        self.last_local: Instant | None = None

    def observe(self, observed: int, local_ts: Instant) -> EventId:
        period = self.config.sync_period.ps
        if self.last_event is None:
            # event k is broadcast at k * sync_period on the SFN time scale
            event_id = nearest_event_index(observed, Fraction(local_ts.ps, period), self.stride)
        else:
            elapsed = Fraction(local_ts.ps - self.last_local.ps, period)
            event_id = unwrap_sfn(observed, self.last_event, self.stride, elapsed)
        self.last_event = event_id
        self.last_local = local_ts
        return event_id


class MasterState:
    """Master side: timestamps SYNC events and batches them into FOLLOW_UPs."""

    def __init__(self, config: ProtocolConfig | None = None, capacity: int | None = None):
        self.config = config or ProtocolConfig()
        self.capacity = capacity or self.config.pending_capacity
        self.tracker = SfnTracker(self.config)
        self.pending: OrderedDict[EventId, Instant] = OrderedDict()
        self.evictions = 0

    def on_sync(self, event: SyncEvent, local_ts: Instant) -> EventId:
        sfn = event.sfn if isinstance(event, SyncEvent) else event
        event_id = self.tracker.observe(sfn, local_ts)
        self.pending[event_id] = local_ts
        if len(self.pending) > self.capacity:
            self.pending.popitem(last=False)
            self.evictions += 1
        return event_id

    def emit_followup(self) -> FollowUp:
        fu = FollowUp(tuple(sorted(self.pending.items())))
        self.pending.clear()
        return fu


class SlaveState:
    """Slave side: timestamps SYNC events and matches them against FOLLOW_UPs.

    Unmatched local timestamps older than ``config.expiry_horizon`` are
    dropped. ``sync`` is the estimator state fed by whoever consumes the
    tuples returned from :meth:`on_followup`.
    """

    def __init__(self, config: ProtocolConfig | None = None, window_n: int = 1024,
                 capacity: int | None = None):
        self.config = config or ProtocolConfig()
        self.capacity = capacity or self.config.pending_capacity
        self.tracker = SfnTracker(self.config)
        self.pending: OrderedDict[EventId, Instant] = OrderedDict()
        self.sync = SyncState(window_n)
        self.expired = 0
        self.evictions = 0
        self.unmatched_followups = 0

    @property
    def last_event(self) -> EventId | None:
        return self.tracker.last_event

    def on_sync(self, observed: int, local_ts: Instant) -> EventId:
        event_id = self.tracker.observe(observed, local_ts)
        self.pending[event_id] = local_ts
        if len(self.pending) > self.capacity:
            self.pending.popitem(last=False)
            self.evictions += 1
        return event_id

    def on_followup(self, fu: FollowUp, now_local: Instant | None = None) -> list[TimestampTuple]:
        tuples = []
        for event_id, t_master in fu.entries:
            t_slave = self.pending.pop(event_id, None)
            if t_slave is None:
                self.unmatched_followups += 1
            else:
                tuples.append(TimestampTuple(t_master, t_slave))
        self.expire(now_local)
        return tuples

    def expire(self, now_local: Instant | None = None) -> int:
        """Drop pending timestamps older than the horizon; returns how many."""
        if now_local is None:
            now_local = self.tracker.last_local
        if now_local is None:
            return 0
        cutoff = now_local.ps - self.config.expiry_horizon.ps
        stale = [eid for eid, ts in self.pending.items() if ts.ps < cutoff]
        for eid in stale:
            del self.pending[eid]
        self.expired += len(stale)
        return len(stale)


def master_on_sync(state: MasterState, event: SyncEvent, local_ts: Instant) -> MasterState:
    state.on_sync(event, local_ts)
    return state


def master_emit_followup(state: MasterState) -> tuple[MasterState, FollowUp]:
    return state, state.emit_followup()


def slave_on_sync(state: SlaveState, observed: int, local_ts: Instant) -> SlaveState:
    state.on_sync(observed, local_ts)
    return state


def slave_on_followup(state: SlaveState, fu: FollowUp,
                      now_local: Instant | None = None) -> tuple[SlaveState, list[TimestampTuple]]:
    return state, state.on_followup(fu, now_local)
