"""Message transports: a deterministic simulated network and real sockets."""

from .params import (
    BASE_RTT_MS,
    FRAME_OVERHEAD,
    CounterSet,
    LinkParams,
    Message,
    TransportCounters,
    load_scenario,
    one_way_ms,
    transfer_time,
)
from .simnet import (
    DeliveryFailedError,
    SimParams,
    SimulatedNetwork,
    combine_pending,
    lossy_transmit,
)

__all__ = [
    "BASE_RTT_MS",
    "FRAME_OVERHEAD",
    "CounterSet",
    "DeliveryFailedError",
    "LinkParams",
    "Message",
    "SimParams",
    "SimulatedNetwork",
    "TransportCounters",
    "combine_pending",
    "load_scenario",
    "lossy_transmit",
    "one_way_ms",
    "transfer_time",
]
