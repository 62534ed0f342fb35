"""Noise activities from programs co-located with the traced service."""

from typing import List, Sequence, Tuple

import numpy as np

from ..models.activity import Activity, ActivityType, ContextId, MessageId
from ..models.config import TopologyConfig
from ..utils.constants import NOISE_REQUEST_ID, NS_PER_US
from .records import SimRecord

# An in-data-center database client that is not itself traced.
SHARED_NOISE_CLIENT_IP = "10.255.255.1"
# Filterable noise comes from hosts outside the data center.
EXTERNAL_NOISE_IP = "198.51.100.7"
NOISE_PORTS = {"sshd": 22, "rlogind": 513}
DEFAULT_NOISE_PORT = 2222
NOISE_THREAD_BASE = 60000
NOISE_REPLY_DELAY_NS = 50 * NS_PER_US


def inject_noise(
    records: List[SimRecord],
    count: int,
    program_names: Sequence[str],
    rng: np.random.Generator,
    *,
    topology: TopologyConfig,
    shared_fraction: float,
    span: Tuple[int, int],
) -> List[SimRecord]:
    """Add ``count`` noise activities as request/reply exchanges.

    A ``shared_fraction`` of the exchanges talk to the last tier's program on
    its own port from an internal host, so only the ranker's noise check can
    discard them; the rest carry one of ``program_names`` and can be filtered
    by attribute. Each exchange gets its own thread.
    """
    if count <= 0:
        return records

    noisy = list(records)
    order = max((r.order for r in records), default=0) + 1
    last_index = len(topology.tiers) - 1
    db = topology.tiers[last_index]
    db_port = topology.port_of(last_index)
    exchanges = (count + 1) // 2
    start, end = span

    for k in range(exchanges):
        when = int(rng.integers(start, end + 1))
        shared = bool(rng.random() < shared_fraction) or not program_names
        if shared:
            host = db
            ctx = ContextId(db.hostname, db.program_name, 1000 * (last_index + 1), NOISE_THREAD_BASE + k)
            peer = (SHARED_NOISE_CLIENT_IP, 40000 + k % 20000)
            local = (db.ip, db_port)
        else:
            program = program_names[int(rng.integers(0, len(program_names)))]
            host = topology.tiers[int(rng.integers(0, len(topology.tiers)))]
            ctx = ContextId(host.hostname, program, 900, NOISE_THREAD_BASE + k)
            peer = (EXTERNAL_NOISE_IP, 40000 + k % 20000)
            local = (host.ip, NOISE_PORTS.get(program, DEFAULT_NOISE_PORT))

        request_size = int(rng.integers(16, 512))
        noisy.append(SimRecord(
            node=host.hostname,
            activity=Activity(ActivityType.RECEIVE, 0, ctx, MessageId(*peer, *local, request_size)),
            true_time=when,
            request_id=NOISE_REQUEST_ID,
            order=order,
        ))
        order += 1
        if 2 * k + 1 < count:
            reply_size = int(rng.integers(16, 4096))
            noisy.append(SimRecord(
                node=host.hostname,
                activity=Activity(ActivityType.SEND, 0, ctx, MessageId(*local, *peer, reply_size)),
                true_time=when + NOISE_REPLY_DELAY_NS,
                request_id=NOISE_REQUEST_ID,
                order=order,
            ))
            order += 1
    return noisy
