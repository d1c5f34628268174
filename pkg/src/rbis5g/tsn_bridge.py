"""Boundary-clock chaining from wireless slaves to a wired TSN grandmaster.

The master UE keeps a second estimator of its own clock against the
grandmaster, fed with (grandmaster timestamp, master-UE timestamp) tuples from
the wired side. A slave reading is first corrected to master-UE time with the
slave's estimator, then to grandmaster time with the link's estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from rbis5g.clockcore import ZERO, Instant, TimeSpan, round_div
from rbis5g.errors import UninitializedError
from rbis5g.estimator import SyncState, TimestampTuple


@dataclass
class GrandmasterLink:
    gm_state: SyncState = field(default_factory=SyncState)
    wired_noise_sigma: TimeSpan = ZERO

    def ingest(self, tup: TimestampTuple) -> GrandmasterLink:
        """Update from a (grandmaster, master-UE) tuple; returns ``self``."""
        self.gm_state.update(tup)
        return self


def gm_ingest(link: GrandmasterLink, tup: TimestampTuple) -> GrandmasterLink:
    return link.ingest(tup)


def translate_chain(states, local_ps, names=None) -> Fraction:
    """Push a local reading through successive estimator stages, exactly.

    ``states[0]`` maps the device's time to the next clock up the chain and so
    on. No rounding happens between stages.
    """
    value = Fraction(local_ps)
    for i, state in enumerate(states):
        if not state.initialized:
            stage = names[i] if names else f"stage {i}"
            raise UninitializedError(f"{stage} estimator has not processed any tuple")
        value = state.corrected_time_exact(value)
    return value


def slave_to_grandmaster(slave_state: SyncState, link: GrandmasterLink,
                         slave_local: Instant) -> Instant:
    """Translate a slave-local reading into grandmaster time."""
    exact = translate_chain([slave_state, link.gm_state], slave_local.ps,
                            names=["slave->master", "master->grandmaster"])
    return Instant(round_div(exact.numerator, exact.denominator))
