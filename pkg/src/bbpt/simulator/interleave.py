"""Two crossing requests whose logs expose the concurrency disturbance.

Request A enters node 1 and calls a back-end on node 2; request B enters
node 2 and calls a back-end on node 1. Each SEND is stamped by a CPU whose
clock runs ahead, so in both node logs the other request's RECEIVE appears
before the local SEND it actually followed::

    node 1: BEGIN_a  R_b  S_a  ...
    node 2: BEGIN_b  R_a  S_b  ...
"""

from typing import Dict, List, Tuple

from ..models.activity import Activity, ActivityType, ContextId, MessageId
from ..models.config import TopologyConfig
from ..utils.constants import NS_PER_US
from .records import SimRecord

# How far ahead the sending CPU's clock runs.
CPU_CLOCK_LEAD_NS = 2 * NS_PER_US
_CLIENT_IPS = ("172.31.255.1", "172.31.255.2")
_CLIENT_PORT = 50000
_BACKEND_CALL_PORT = 50100


def emit_concurrency_interleaving(
    topology: TopologyConfig,
    start_ns: int,
    order_base: int = 0,
) -> Tuple[List[SimRecord], Dict[str, List[Tuple[int, int]]]]:
    """Emit the two crossing requests on the first two tiers' hosts."""
    hosts = topology.tiers[:2]
    front_program = topology.tiers[0].program_name
    back_program = topology.tiers[1].program_name
    entry_port = topology.entry_port
    back_port = topology.port_of(1)

    records: List[SimRecord] = []
    messages: Dict[str, List[Tuple[int, int]]] = {}
    order = [order_base]

    def emit(host, ctx, kind, channel, size, true_offset, request_id, cpu_offset=0):
        activity = Activity(kind, 0, ctx, MessageId(*channel, size))
        records.append(SimRecord(
            node=host.hostname,
            activity=activity,
            true_time=start_ns + true_offset,
            request_id=request_id,
            order=order[0],
            cpu_offset=cpu_offset,
        ))
        order[0] += 1

    for index, (front, back) in enumerate(((hosts[0], hosts[1]), (hosts[1], hosts[0]))):
        request_id = f"interleave-{'ab'[index]}"
        front_ctx = ContextId(front.hostname, front_program, 7001 + index, 7001 + index)
        back_ctx = ContextId(back.hostname, back_program, 7101 + index, 7101 + index)
        client = (_CLIENT_IPS[index], _CLIENT_PORT)
        entry = (front.ip, entry_port)
        call = (front.ip, _BACKEND_CALL_PORT + index)
        backend = (back.ip, back_port)
        us = NS_PER_US

        emit(front, front_ctx, ActivityType.RECEIVE, (*client, *entry), 300, 0, request_id)
        emit(front, front_ctx, ActivityType.SEND, (*call, *backend), 200, 10 * us, request_id,
             cpu_offset=CPU_CLOCK_LEAD_NS)
        emit(back, back_ctx, ActivityType.RECEIVE, (*call, *backend), 200, 11 * us, request_id)
        emit(back, back_ctx, ActivityType.SEND, (*backend, *call), 700, 20 * us, request_id)
        emit(front, front_ctx, ActivityType.RECEIVE, (*backend, *call), 700, 21 * us, request_id)
        emit(front, front_ctx, ActivityType.SEND, (*entry, *client), 900, 30 * us, request_id)
        messages[request_id] = [
            (start_ns + 10 * us, start_ns + 11 * us),
            (start_ns + 20 * us, start_ns + 21 * us),
        ]
    return records, messages
