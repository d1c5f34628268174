"""Scenario configuration and its JSON form.

JSON keys carry their unit in the name (``sync_period_ms``, ``jitter_sigma_ns``)
and nothing is inferred. Structural problems (bad JSON, unknown or missing
keys, wrong types) raise :class:`ConfigError`; values outside their allowed
range raise :class:`ConfigInvariantError`. Both name the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from rbis5g.clockcore import ZERO, ClockParams, TimeSpan
from rbis5g.errors import ConfigError, ConfigInvariantError
from rbis5g.protocol import ProtocolConfig

DEFAULT_SWEEP = (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)


@dataclass(frozen=True)
class GrandmasterConfig:
    """Wired reference between the master UE and a TSN grandmaster (true time)."""

    tuple_period: TimeSpan = TimeSpan.from_ms(100)
    wired_noise_sigma: TimeSpan = ZERO
    filter_n: int = 64


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    duration: TimeSpan | None = None
    protocol: ProtocolConfig = field(default_factory=ProtocolConfig)
    followup_latency: TimeSpan = TimeSpan.from_ms(1)
    followup_loss_prob: float = 0.0
    sync_loss_prob: float = 0.0
    master_clock: ClockParams = field(default_factory=ClockParams)
    slave_clock: ClockParams = field(default_factory=ClockParams)
    master_distance_m: float = 0.0
    slave_distance_m: float = 0.0
    ta_compensation: bool = False
    ta_unit: TimeSpan = TimeSpan.from_ns("16.276")
    filter_sweep: tuple[int, ...] = DEFAULT_SWEEP
    prediction_filter_n: int = 1024
    edge_period: TimeSpan = TimeSpan.from_ms(10)
    edge_lead: TimeSpan = TimeSpan.from_ms(1)
    scope_jitter_sigma: TimeSpan = ZERO
    scope_quantum: TimeSpan = ZERO
    edge_warmup_tuples: int | None = None
    skew_series_length: int = 1000
    offset_series_length: int = 500
    grandmaster: GrandmasterConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "filter_sweep", tuple(sorted(set(self.filter_sweep))))
        self.validate()

    @property
    def max_filter_n(self) -> int:
        return self.filter_sweep[-1]

    @property
    def warmup_tuples(self) -> int:
        if self.edge_warmup_tuples is not None:
            return self.edge_warmup_tuples
        return self.prediction_filter_n + 1

    @property
    def tuple_log_length(self) -> int:
        """Tuples needed so every filter size yields ``skew_series_length`` full-window estimates."""
        return self.max_filter_n + self.skew_series_length

    def minimum_duration(self) -> TimeSpan:
        """Run time needed without message loss to collect every requested sample."""
        p = self.protocol
        tuples_done = self.tuple_log_length * p.sync_period.ps + p.followup_period.ps
        edges_start = self.warmup_tuples * p.sync_period.ps + p.followup_period.ps
        edges_done = edges_start + (self.offset_series_length + 1) * self.edge_period.ps
        return TimeSpan(max(tuples_done, edges_done) + self.followup_latency.ps + self.edge_period.ps)

    def default_duration(self) -> TimeSpan:
        keep = (1.0 - self.sync_loss_prob) ** 2 * (1.0 - self.followup_loss_prob)
        if keep <= 0.0:
            return TimeSpan(2 * self.minimum_duration().ps)
        return TimeSpan(math.ceil(self.minimum_duration().ps * 1.25 / keep))

    def validate(self) -> None:
        def bad(name, msg):
            raise ConfigInvariantError(f"{name}: {msg}", field=name)

        for name in ("followup_loss_prob", "sync_loss_prob"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                bad(name, f"must be a probability in [0, 1], got {v!r}")
        for name in ("master_distance_m", "slave_distance_m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                bad(name, f"must be a finite distance >= 0, got {v!r}")
        for name in ("edge_period", "ta_unit"):
            if getattr(self, name).ps <= 0:
                bad(name, "must be positive")
        for name in ("followup_latency", "edge_lead", "scope_jitter_sigma", "scope_quantum"):
            if getattr(self, name).ps < 0:
                bad(name, "must be >= 0")
        if self.edge_lead >= self.edge_period:
            bad("edge_lead", "must be shorter than edge_period")
        if not self.filter_sweep or self.filter_sweep[0] < 1:
            bad("filter_sweep", "must be a non-empty list of positive window sizes")
        if self.prediction_filter_n < 1:
            bad("prediction_filter_n", "must be >= 1")
        if self.edge_warmup_tuples is not None and self.edge_warmup_tuples < 1:
            bad("edge_warmup_tuples", "must be >= 1")
        for name in ("skew_series_length", "offset_series_length"):
            if getattr(self, name) < 1:
                bad(name, "must be >= 1")
        limit = self.protocol.max_initial_offset
        for name, clock in (("clocks.master", self.master_clock), ("clocks.slave", self.slave_clock)):
            if abs(clock.initial_offset) > limit:
                bad(f"{name}.initial_offset_ns",
                    f"|offset| must not exceed {limit.ps / 1e12:g} s for SFN disambiguation")
        if self.duration is not None:
            need = self.minimum_duration()
            if self.duration < need:
                bad("duration_s", f"too short for the requested sample counts (need >= {need.ps / 1e12:g} s)")
        if self.grandmaster is not None:
            gm = self.grandmaster
            if gm.tuple_period.ps <= 0:
                bad("grandmaster.tuple_period_ms", "must be positive")
            if gm.wired_noise_sigma.ps < 0:
                bad("grandmaster.wired_noise_sigma_ns", "must be >= 0")
            if gm.filter_n < 1:
                bad("grandmaster.filter_n", "must be >= 1")

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, seed=seed)


# JSON parsing ---------------------------------------------------------------

class _Section:
    """Typed, strict accessor over one JSON object."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'config'}: expected an object", field=path)
        self.data = data
        self.path = path
        self.used = set()

    def _name(self, key):
        return f"{self.path}.{key}" if self.path else key

    def get(self, key, kind, default=None, required=False):
        name = self._name(key)
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if required:
                raise ConfigError(f"{name}: missing required field", field=name)
            return default
        v = self.data[key]
        if kind is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{name}: expected a number, got {v!r}", field=name)
            return v
        if kind is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name}: expected an integer, got {v!r}", field=name)
            return v
        if kind is bool:
            if not isinstance(v, bool):
                raise ConfigError(f"{name}: expected true/false, got {v!r}", field=name)
            return v
        if kind is list:
            if not isinstance(v, list):
                raise ConfigError(f"{name}: expected a list, got {v!r}", field=name)
            return v
        if kind is dict:
            return _Section(v, name)
        raise TypeError(kind)

    def span(self, key, unit, default=None, required=False):
        v = self.get(key, float, required=required)
        if v is None:
            return default
        name = self._name(key)
        if not math.isfinite(v):
            raise ConfigInvariantError(f"{name}: must be finite", field=name)
        return {"s": TimeSpan.from_seconds, "ms": TimeSpan.from_ms,
                "us": TimeSpan.from_us, "ns": TimeSpan.from_ns, "ps": TimeSpan.from_ps}[unit](v)

    def section(self, key):
        v = self.get(key, dict)
        return v if v is not None else _Section({}, self._name(key))

    def finish(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            name = self._name(extra[0])
            raise ConfigError(f"{name}: unknown field", field=name)


def _clock(sec: _Section) -> ClockParams:
    try:
        params = ClockParams(
            initial_offset=sec.span("initial_offset_ns", "ns", ZERO),
            skew_ppm=float(sec.get("skew_ppm", float, 0.0)),
            timestamp_jitter_sigma=sec.span("jitter_sigma_ns", "ns", ZERO),
            drift_random_walk_sigma=float(sec.get("drift_random_walk_ppm_per_sqrt_s", float, 0.0)),
            timestamp_resolution=sec.span("timestamp_resolution_ps", "ps", ZERO),
        )
    except ValueError as exc:
        raise ConfigInvariantError(f"{sec.path}: {exc}", field=sec.path) from exc
    sec.finish()
    return params


def config_from_dict(data) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from parsed JSON."""
    root = _Section(data, "")
    kw = {}
    kw["seed"] = root.get("seed", int, 0)
    kw["duration"] = root.span("duration_s", "s")
    kw["followup_loss_prob"] = root.get("followup_loss_prob", float, 0.0)
    kw["sync_loss_prob"] = root.get("sync_loss_prob", float, 0.0)

    proto = root.section("protocol")
    try:
        kw["protocol"] = ProtocolConfig(
            sync_period=proto.span("sync_period_ms", "ms", TimeSpan.from_ms(10)),
            followup_period=proto.span("followup_period_ms", "ms", TimeSpan.from_ms(100)),
            pending_capacity=proto.get("pending_capacity", int, 4096),
        )
    except ValueError as exc:
        raise ConfigInvariantError(f"protocol: {exc}", field="protocol") from exc
    kw["followup_latency"] = proto.span("followup_latency_ms", "ms", TimeSpan.from_ms(1))
    proto.finish()

    clocks = root.section("clocks")
    kw["master_clock"] = _clock(clocks.section("master"))
    kw["slave_clock"] = _clock(clocks.section("slave"))
    clocks.finish()

    geo = root.section("geometry")
    kw["master_distance_m"] = float(geo.get("master_distance_m", float, 0.0))
    kw["slave_distance_m"] = float(geo.get("slave_distance_m", float, 0.0))
    geo.finish()

    ta = root.section("ta_compensation")
    kw["ta_compensation"] = ta.get("enabled", bool, False)
    # the TA granularity has no implied numerology, so it must be stated when used
    kw["ta_unit"] = ta.span("unit_ns", "ns", TimeSpan.from_ns("16.276"),
                            required=kw["ta_compensation"])
    ta.finish()

    est = root.section("estimator")
    sweep = est.get("filter_sweep", list, list(DEFAULT_SWEEP))
    for v in sweep:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"estimator.filter_sweep: expected integers, got {v!r}",
                              field="estimator.filter_sweep")
    kw["filter_sweep"] = tuple(sweep)
    kw["prediction_filter_n"] = est.get("prediction_filter_n", int, 1024)
    est.finish()

    val = root.section("validation")
    kw["edge_period"] = val.span("edge_period_ms", "ms", TimeSpan.from_ms(10))
    kw["edge_lead"] = val.span("edge_lead_ms", "ms", TimeSpan.from_ms(1))
    kw["scope_jitter_sigma"] = val.span("scope_jitter_sigma_ns", "ns", ZERO)
    kw["scope_quantum"] = val.span("scope_quantum_ps", "ps", ZERO)
    kw["edge_warmup_tuples"] = val.get("warmup_tuples", int)
    val.finish()

    meas = root.section("measurement")
    kw["skew_series_length"] = meas.get("skew_series_length", int, 1000)
    kw["offset_series_length"] = meas.get("offset_series_length", int, 500)
    meas.finish()

    if root.data.get("grandmaster") is not None:
        gm = root.section("grandmaster")
        kw["grandmaster"] = GrandmasterConfig(
            tuple_period=gm.span("tuple_period_ms", "ms", TimeSpan.from_ms(100)),
            wired_noise_sigma=gm.span("wired_noise_sigma_ns", "ns", required=True),
            filter_n=gm.get("filter_n", int, 64),
        )
        gm.finish()
    else:
        root.used.add("grandmaster")
    root.finish()
    return ScenarioConfig(**kw)


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(data)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
