"""Discrete-event simulation of one gNB, a master UE and a slave UE.

Events live in a single true-time priority queue; ties are broken by event
kind, then device, then insertion order, so a seed fully determines a run.
The gNB broadcasts SYNCs every sync period; each UE timestamps the reception
with its own clock after its propagation delay. The master batches its
timestamps into FOLLOW_UPs, the slave matches them, optionally removes the
TA-estimated propagation delay, and feeds its estimator. Both UEs emit a
validation edge every edge period (the slave steers its edge with the current
prediction) and the simulated scope records the edge difference.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from rbis5g.clockcore import Instant, SimulatedClock, round_div
from rbis5g.compensation import compensate_tuple, propagation_delay, timing_advance_for_distance
from rbis5g.errors import PeriodAssociationError, SfnAmbiguityError, SimulationAbort
from rbis5g.estimator import SyncState, TimestampTuple, replay
from rbis5g.protocol import MasterState, SlaveState, sfn_of
from rbis5g.simharness.scenario import ScenarioConfig
from rbis5g.simharness.stats import EdgeMeasurement, StatsSummary, measure_edge_offset, stats_summary
from rbis5g.tsn_bridge import GrandmasterLink, translate_chain

# event kinds, in tie-break order
BROADCAST, SYNC_RX, GM_TUPLE, FOLLOWUP_EMIT, FOLLOWUP_RX, EDGE = range(6)
MASTER, SLAVE = 0, 1
DEVICE_NAMES = ("master", "slave")

# order of the independent random streams spawned from the scenario seed
_STREAMS = ("master_clock", "slave_clock", "sync_loss", "followup_loss", "scope", "wired")


def _round(x: Fraction) -> int:
    return round_div(x.numerator, x.denominator)


@dataclass
class SimulationReport:
    config: ScenarioConfig
    tuples: list[TimestampTuple]
    skew_series: dict[int, list[float]]
    edges: list[EdgeMeasurement]
    # ground truth: theta_measured == residual + scope error, exactly
    edge_residuals_ps: list[int]
    edge_scope_errors_ps: list[int]
    gm_errors_ps: list[int] = field(default_factory=list)
    gm_stage_errors_ps: list[tuple[int, int]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)
    end_time: Instant = Instant(0)

    def offset_series_ns(self) -> list[float]:
        return [m.theta_ns for m in self.edges]


def skew_series_from_tuples(tuples, filter_sweep, series_length=None) -> dict[int, list[float]]:
    """Filtered-skew series per window size, recomputed from one tuple log.

    Every series covers the same tuple indices, starting where the largest
    window first holds N samples, so rows differ only through N.
    """
    sweep = sorted(set(filter_sweep))
    start = sweep[-1]
    stop = len(tuples) if series_length is None else min(len(tuples), start + series_length)
    if stop <= start:
        raise ValueError(
            f"tuple log of {len(tuples)} entries is too short for window {start}"
        )
    return {n: replay(tuples[:stop], n)[start:stop] for n in sweep}


def run_scenario(cfg: ScenarioConfig) -> SimulationReport:
    """Run one seeded scenario to completion."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(len(_STREAMS))]
    rng = dict(zip(_STREAMS, streams))
    clocks = (SimulatedClock(cfg.master_clock, rng["master_clock"]),
              SimulatedClock(cfg.slave_clock, rng["slave_clock"]))
    proto = cfg.protocol
    period = proto.sync_period.ps
    stride = proto.stride
    delays = (propagation_delay(cfg.master_distance_m).ps, propagation_delay(cfg.slave_distance_m).ps)
    tas = (timing_advance_for_distance(cfg.master_distance_m, cfg.ta_unit),
           timing_advance_for_distance(cfg.slave_distance_m, cfg.ta_unit))

    master = MasterState(proto)
    slave = SlaveState(proto, window_n=cfg.prediction_filter_n)
    gm = cfg.grandmaster
    link = GrandmasterLink(SyncState(gm.filter_n), gm.wired_noise_sigma) if gm else None

    end = (cfg.duration or cfg.default_duration()).ps
    need_tuples = cfg.tuple_log_length
    need_edges = cfg.offset_series_length
    counters = dict.fromkeys(("sync_lost_master", "sync_lost_slave", "followups_lost",
                              "followups_delivered", "edges_skipped_warmup"), 0)

    tuple_log: list[TimestampTuple] = []
    edges: list[EdgeMeasurement] = []
    residuals: list[int] = []
    scope_errors: list[int] = []
    gm_errors: list[int] = []
    gm_stage: list[tuple[int, int]] = []

    queue = []
    seq = itertools.count()

    def push(t, kind, device, payload=None):
        heapq.heappush(queue, (t, kind, device, next(seq), payload))

    push(0, BROADCAST, MASTER, 0)
    push(proto.followup_period.ps, FOLLOWUP_EMIT, MASTER)
    push(cfg.edge_period.ps - cfg.edge_lead.ps, EDGE, MASTER, 1)
    if gm:
        push(0, GM_TUPLE, MASTER)

    t = 0
    while queue:
        if len(tuple_log) >= need_tuples and len(edges) >= need_edges:
            break
        t, kind, device, _, payload = heapq.heappop(queue)
        if t > end:
            break

        if kind == BROADCAST:
            k = payload
            if k:
                for clock in clocks:
                    clock.advance_drift(proto.sync_period)
            sfn = sfn_of(k, stride)
            for dev in (MASTER, SLAVE):
                if cfg.sync_loss_prob and rng["sync_loss"].random() < cfg.sync_loss_prob:
                    counters[f"sync_lost_{DEVICE_NAMES[dev]}"] += 1
                    continue
                push(t + delays[dev], SYNC_RX, dev, (k, sfn))
            push(t + period, BROADCAST, MASTER, k + 1)

        elif kind == SYNC_RX:
            k, sfn = payload
            local = clocks[device].local_time(Instant(t))
            try:
                (master if device == MASTER else slave).on_sync(sfn, local)
            except SfnAmbiguityError as exc:
                raise SimulationAbort(
                    f"SYNC {k} (SFN {sfn}) at {DEVICE_NAMES[device]}: {exc}",
                    event_index=k, device=DEVICE_NAMES[device],
                ) from exc

        elif kind == FOLLOWUP_EMIT:
            fu = master.emit_followup()
            push(t + proto.followup_period.ps, FOLLOWUP_EMIT, MASTER)
            if not fu.entries:
                continue
            if cfg.followup_loss_prob and rng["followup_loss"].random() < cfg.followup_loss_prob:
                counters["followups_lost"] += 1
                continue
            push(t + cfg.followup_latency.ps, FOLLOWUP_RX, SLAVE, fu)

        elif kind == FOLLOWUP_RX:
            counters["followups_delivered"] += 1
            now_local = clocks[SLAVE].local_time_deterministic(Instant(t))
            for tup in slave.on_followup(payload, now_local):
                if cfg.ta_compensation:
                    tup = compensate_tuple(tup, tas[MASTER], tas[SLAVE])
                slave.sync.update(tup)
                if len(tuple_log) < need_tuples:
                    tuple_log.append(tup)

        elif kind == GM_TUPLE:
            # grandmaster time is true time; the wired read noise lands on the master UE side
            reading = clocks[MASTER].local_time_deterministic(Instant(t)).ps
            if gm.wired_noise_sigma.ps:
                reading += int(round(rng["wired"].normal(0.0, gm.wired_noise_sigma.ps)))
            link.ingest(TimestampTuple(Instant(t), Instant(reading)))
            push(t + gm.tuple_period.ps, GM_TUPLE, MASTER)

        elif kind == EDGE:
            k = payload
            push(t + cfg.edge_period.ps, EDGE, MASTER, k + 1)
            if len(edges) >= need_edges:
                continue
            if slave.sync.tuple_count < cfg.warmup_tuples or (link and not link.gm_state.initialized):
                counters["edges_skipped_warmup"] += 1
                continue
            target = Instant(k * cfg.edge_period.ps)
            master_true = clocks[MASTER].true_time_of_local_exact(target)
            slave_local = slave.sync.local_time_of_master(target)
            slave_true = clocks[SLAVE].true_time_of_local_exact(slave_local)
            master_edge = Instant(_round(master_true))
            residual = _round(slave_true - master_true)
            try:
                m = measure_edge_offset(master_edge, Instant(master_edge.ps + residual),
                                        cfg.scope_jitter_sigma, rng["scope"],
                                        cfg.edge_period, cfg.scope_quantum)
            except PeriodAssociationError as exc:
                raise SimulationAbort(f"validation edge {k}: {exc}", event_index=k,
                                      device="slave") from exc
            edges.append(m)
            residuals.append(residual)
            scope_errors.append(m.theta_measured.ps - residual)
            if link:
                gm_est = translate_chain([slave.sync, link.gm_state], slave_local.ps)
                gm_errors.append(_round(gm_est - slave_true))
                master_local_true = clocks[MASTER].local_time_exact(slave_true)
                stage1 = _round(slave.sync.corrected_time_exact(slave_local.ps) - master_local_true)
                stage2 = _round(link.gm_state.corrected_time_exact(master_local_true) - slave_true)
                gm_stage.append((stage1, stage2))

    if len(tuple_log) < need_tuples or len(edges) < need_edges:
        raise SimulationAbort(
            f"run ended at {t / 1e12:.3f} s with {len(tuple_log)}/{need_tuples} tuples and "
            f"{len(edges)}/{need_edges} edge measurements; increase duration_s or lower loss"
        )

    counters.update(
        expired=slave.expired, master_evictions=master.evictions,
        slave_evictions=slave.evictions, unmatched_followup_entries=slave.unmatched_followups,
    )
    return SimulationReport(
        config=cfg,
        tuples=tuple_log,
        skew_series=skew_series_from_tuples(tuple_log, cfg.filter_sweep, cfg.skew_series_length),
        edges=edges,
        edge_residuals_ps=residuals,
        edge_scope_errors_ps=scope_errors,
        gm_errors_ps=gm_errors,
        gm_stage_errors_ps=gm_stage,
        counters=counters,
        end_time=Instant(t),
    )


def sweep_filter_sizes(cfg: ScenarioConfig, report: SimulationReport | None = None
                       ) -> list[tuple[int, StatsSummary]]:
    """Skew statistics per window size from a single run, ordered by N."""
    if not cfg.filter_sweep:
        raise ValueError("filter_sweep is empty")
    report = report or run_scenario(cfg)
    return [(n, stats_summary(report.skew_series[n], "ppm")) for n in sorted(report.skew_series)]
