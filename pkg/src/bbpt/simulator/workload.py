"""Discrete-event simulation of a multi-tier service emitting kernel activity logs.

Clients outside the data center issue requests to tier 0. Every tier services
a request with one worker (process or thread) taken from its pool, calls the
next tier the number of times the request class asks for, and replies on the
connection the request arrived on. Only tier nodes are logged.
"""

import logging
from dataclasses import dataclass
from itertools import count
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import simpy

from ..errors import ConfigError
from ..models.activity import Activity, ActivityType, Channel, ContextId, MessageId
from ..models.config import (
    DisturbanceConfig,
    Distribution,
    FaultKind,
    RequestClass,
    SimulationConfig,
    TopologyConfig,
    WorkerModel,
    WorkloadConfig,
)
from ..utils.constants import EPHEMERAL_PORTS, NS_PER_MS, SIMULATION_EPOCH_NS
from .interleave import emit_concurrency_interleaving
from .noise import inject_noise
from .records import SimRecord, SimulationResult, assemble_logs
from .splitting import split_message

logger = logging.getLogger(__name__)


@dataclass
class Worker:
    """An execution entity of a tier."""
    context: ContextId


@dataclass
class SimRequest:
    request_id: str
    request_class: RequestClass
    depth: int


@dataclass
class SimMessage:
    """A message in flight with its independently cut send and receive parts."""
    request_id: str
    channel: Channel
    send_parts: List[int]
    receive_parts: List[int]
    last_send_true: int = 0


class PortAllocator:
    """Hands out ephemeral ports per host in a cycle."""

    def __init__(self):
        self._next: Dict[str, int] = {}

    def allocate(self, ip: str) -> int:
        low, high = EPHEMERAL_PORTS
        port = self._next.get(ip, low)
        self._next[ip] = low if port >= high else port + 1
        return port


def _client_ip(index: int) -> str:
    return f"172.16.{index // 250}.{index % 250 + 1}"


def _workers(tier_index: int, topology: TopologyConfig) -> List[Worker]:
    tier = topology.tiers[tier_index]
    base_pid = 1000 * (tier_index + 1)
    if tier.worker_model is WorkerModel.ITERATIVE:
        ids = [(base_pid, base_pid)]
    elif tier.worker_model is WorkerModel.PROCESS_POOL:
        ids = [(base_pid + k, base_pid + k) for k in range(tier.pool_size)]
    else:
        ids = [(base_pid, base_pid + 1 + k) for k in range(tier.pool_size)]
    return [
        Worker(ContextId(tier.hostname, tier.program_name, pid, tid))
        for pid, tid in ids
    ]


class ServiceSimulation:
    """simpy model of clients and tiers; collects emitted records."""

    def __init__(self, config: SimulationConfig, rng: np.random.Generator):
        self.config = config
        self.topology = config.topology
        self.workload = config.workload
        self.disturbance = config.disturbance
        self.rng = rng
        self.env = simpy.Environment(initial_time=SIMULATION_EPOCH_NS)
        self.ports = PortAllocator()
        self.records: List[SimRecord] = []
        self.messages: Dict[str, List[Tuple[int, int]]] = {}
        self.request_classes: Dict[str, str] = {}
        self._order = count()
        self._request_ids = count()
        self.pools = []
        for tier_index in range(len(self.topology.tiers)):
            pool = simpy.Store(self.env)
            pool.items.extend(_workers(tier_index, self.topology))
            self.pools.append(pool)
        weights = np.array([c.weight for c in self.workload.request_classes], dtype=float)
        self._class_weights = weights / weights.sum()

    def run(self) -> None:
        for index in range(self.workload.num_clients):
            self.env.process(self._client(index))
        self.env.run()

    @property
    def finished_at(self) -> int:
        return int(self.env.now)

    def _draw(self, dist: Distribution) -> int:
        if dist.jitter_ns <= 0:
            return dist.base_ns
        return dist.base_ns + int(self.rng.integers(0, dist.jitter_ns + 1))

    def _size(self, bounds: Tuple[int, int]) -> int:
        low, high = bounds
        return int(self.rng.integers(low, high + 1))

    def _network(self, upstream_tier: Optional[int]) -> int:
        delay = max(1, self._draw(self.workload.network_delay))
        if upstream_tier is not None:
            delay += self.disturbance.added_link_ns(upstream_tier)
        return delay

    def _service_time(self, tier_index: int) -> int:
        service = self._draw(self.workload.service_times[tier_index])
        for fault in self.disturbance.tier_faults(tier_index):
            if fault.kind is FaultKind.LOCK:
                service += fault.added_ns
            else:
                service += int(self.rng.integers(0, 2 * fault.added_ns + 1))
        return service

    def _message(self, request_id: str, channel: Channel, size: int, splittable: bool) -> SimMessage:
        send_parts = receive_parts = 1
        dist = self.disturbance
        if splittable and dist.max_split_parts > 1 and self.rng.random() < dist.message_split_probability:
            send_parts = int(self.rng.integers(1, dist.max_split_parts + 1))
            receive_parts = int(self.rng.integers(1, dist.max_split_parts + 1))
        sends, receives = split_message(
            size, min(send_parts, size), min(receive_parts, size), self.rng
        )
        return SimMessage(request_id, channel, sends, receives)

    def _emit(self, worker: Worker, activity_type: ActivityType, channel: Channel,
              size: int, request_id: str) -> None:
        sender_ip, sender_port, receiver_ip, receiver_port = channel
        activity = Activity(
            activity_type=activity_type,
            timestamp=0,
            context=worker.context,
            message=MessageId(sender_ip, sender_port, receiver_ip, receiver_port, size),
        )
        self.records.append(SimRecord(
            node=worker.context.hostname,
            activity=activity,
            true_time=int(self.env.now),
            request_id=request_id,
            order=next(self._order),
        ))

    def _send(self, worker: Worker, message: SimMessage) -> Iterator:
        gap = self.workload.part_gap_ns
        for k, size in enumerate(message.send_parts):
            if k:
                yield self.env.timeout(gap)
            self._emit(worker, ActivityType.SEND, message.channel, size, message.request_id)
        message.last_send_true = int(self.env.now)

    def _receive(self, worker: Worker, message: SimMessage, logged_sender: bool = True) -> Iterator:
        gap = self.workload.part_gap_ns
        if logged_sender:
            self.messages.setdefault(message.request_id, []).append(
                (message.last_send_true, int(self.env.now))
            )
        for k, size in enumerate(message.receive_parts):
            if k:
                yield self.env.timeout(gap)
            self._emit(worker, ActivityType.RECEIVE, message.channel, size, message.request_id)

    def _client(self, index: int) -> Iterator:
        ip = _client_ip(index)
        entry = self.topology.tiers[0]
        for _ in range(self.workload.requests_per_client):
            yield self.env.timeout(self._draw(self.workload.think_time))
            request = self._new_request()
            channel = (ip, self.ports.allocate(ip), entry.ip, self.topology.entry_port)
            message = self._message(
                request.request_id, channel, self._size(self.workload.request_size), splittable=False
            )
            yield self.env.timeout(self._network(None))
            yield self.env.process(self._serve(0, request, message))
            yield self.env.timeout(self._network(None))

    def _new_request(self) -> SimRequest:
        choice = int(self.rng.choice(len(self._class_weights), p=self._class_weights))
        request_class = self.workload.request_classes[choice]
        tiers = len(self.topology.tiers)
        depth = tiers if request_class.depth is None else min(request_class.depth, tiers)
        request = SimRequest(f"r{next(self._request_ids):07d}", request_class, depth)
        self.request_classes[request.request_id] = request_class.name
        return request

    def _serve(self, tier_index: int, request: SimRequest, inbound: SimMessage) -> Iterator:
        tier = self.topology.tiers[tier_index]
        worker = yield self.pools[tier_index].get()
        try:
            yield from self._receive(worker, inbound, logged_sender=tier_index > 0)
            service = self._service_time(tier_index)
            before = service // 2
            yield self.env.timeout(before)

            if tier_index + 1 < request.depth:
                downstream = self.topology.tiers[tier_index + 1]
                for _ in range(request.request_class.calls):
                    channel = (
                        tier.ip,
                        self.ports.allocate(tier.ip),
                        downstream.ip,
                        self.topology.port_of(tier_index + 1),
                    )
                    outbound = self._message(
                        request.request_id, channel,
                        self._size(self.workload.request_size), splittable=True,
                    )
                    yield from self._send(worker, outbound)
                    yield self.env.timeout(self._network(tier_index))
                    reply = yield self.env.process(self._serve(tier_index + 1, request, outbound))
                    yield self.env.timeout(self._network(tier_index))
                    yield from self._receive(worker, reply)

            yield self.env.timeout(service - before)
            sender_ip, sender_port, receiver_ip, receiver_port = inbound.channel
            reply = self._message(
                request.request_id,
                (receiver_ip, receiver_port, sender_ip, sender_port),
                self._size(self.workload.reply_size),
                splittable=tier_index > 0,
            )
            yield from self._send(worker, reply)
        finally:
            self.pools[tier_index].put(worker)
        return reply


def _check(config: SimulationConfig) -> None:
    topology, workload = config.topology, config.workload
    if not topology.tiers:
        raise ConfigError("topology needs at least one tier")
    if len(topology.inter_tier_ports) < len(topology.tiers) - 1:
        raise ConfigError("every tier after the first needs an inter-tier port")
    if len(workload.service_times) != len(topology.tiers):
        raise ConfigError(
            f"expected {len(topology.tiers)} service times, got {len(workload.service_times)}"
        )
    if workload.num_clients < 1 or workload.requests_per_client < 1:
        raise ConfigError("num_clients and requests_per_client must be positive")
    for tier in topology.tiers:
        if tier.pool_size < 1:
            raise ConfigError(f"tier {tier.hostname} needs a pool size of at least 1")
    if any(c.calls < 1 or c.weight <= 0 for c in workload.request_classes):
        raise ConfigError("request classes need calls >= 1 and a positive weight")
    dist = config.disturbance
    for name, p in (
        ("message_split_probability", dist.message_split_probability),
        ("shared_noise_fraction", dist.shared_noise_fraction),
        ("drop_probability", dist.drop_probability),
    ):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name} must be within [0, 1], got {p}")
    if dist.max_split_parts < 1:
        raise ConfigError("max_split_parts must be at least 1")
    if dist.noise_activity_count < 0:
        raise ConfigError("noise_activity_count must not be negative")
    if dist.concurrency_interleave and len(topology.tiers) < 2:
        raise ConfigError("concurrency interleaving needs at least two tiers")
    for fault in dist.faults:
        limit = len(topology.tiers) - (1 if fault.kind is FaultKind.LINK else 0)
        if not 0 <= fault.tier < limit:
            raise ConfigError(f"fault targets tier {fault.tier} outside the topology")


def generate(
    topology: TopologyConfig,
    workload: WorkloadConfig,
    disturbance: Optional[DisturbanceConfig] = None,
) -> SimulationResult:
    """Run the simulation and return per-node logs plus ground truth.

    The result depends only on the configuration and its seed.
    """
    config = SimulationConfig(topology, workload, disturbance or DisturbanceConfig())
    _check(config)
    dist = config.disturbance
    workload_rng, noise_rng, drop_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(workload.seed).spawn(3)
    )

    simulation = ServiceSimulation(config, workload_rng)
    simulation.run()
    records = simulation.records
    logger.info("simulated %d requests, %d activities", workload.total_requests, len(records))

    if dist.drop_probability > 0:
        kept = drop_rng.random(len(records)) >= dist.drop_probability
        records = [r for r, keep in zip(records, kept) if keep]
        logger.info("dropped %d activities", int((~kept).sum()))

    messages = simulation.messages
    request_classes = dict(simulation.request_classes)
    if dist.concurrency_interleave:
        start = simulation.finished_at + NS_PER_MS
        extra, extra_messages = emit_concurrency_interleaving(topology, start, order_base=len(records))
        records = records + extra
        messages = {**messages, **extra_messages}
        request_classes.update({rid: "interleave" for rid in extra_messages})

    start, end = SIMULATION_EPOCH_NS, max(simulation.finished_at, SIMULATION_EPOCH_NS + 1)
    records = inject_noise(
        records, dist.noise_activity_count, dist.noise_program_names, noise_rng,
        topology=topology, shared_fraction=dist.shared_noise_fraction, span=(start, end),
    )

    nodes = [tier.hostname for tier in topology.tiers]
    return assemble_logs(records, nodes, dist.clock_skew_per_node, messages, request_classes)
