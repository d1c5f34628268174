"""Reference-broadcast time synchronization for hybrid 5G/TSN networks.

UEs timestamp the SFN-identified gNB broadcast with their own clocks; a master
UE publishes its timestamps in FOLLOW_UP messages, and each slave estimates
offset and moving-average skew against it. The package also ships a seeded
discrete-event testbed simulation and a CLI that reproduces skew and offset
statistics.
"""

from rbis5g.clockcore import ClockParams, Instant, SimulatedClock, TimeSpan
from rbis5g.compensation import TimingAdvance, compensate_tuple, one_way_delay
from rbis5g.estimator import SyncState, TimestampTuple, offset_of, skew_of
from rbis5g.protocol import FollowUp, MasterState, ProtocolConfig, SlaveState, Sfn, unwrap_sfn
from rbis5g.tsn_bridge import GrandmasterLink, gm_ingest, slave_to_grandmaster

__version__ = "0.1.0"

__all__ = [
    "ClockParams", "FollowUp", "GrandmasterLink", "Instant", "MasterState", "ProtocolConfig",
    "Sfn", "SimulatedClock", "SlaveState", "SyncState", "TimeSpan", "TimestampTuple",
    "TimingAdvance", "compensate_tuple", "gm_ingest", "offset_of", "one_way_delay",
    "skew_of", "slave_to_grandmaster", "unwrap_sfn", "__version__",
]
