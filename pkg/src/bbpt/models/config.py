"""Typed configuration for simulation and correlation runs."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

from ..utils.constants import (
    DEFAULT_DEFORMED_FREQUENCY,
    DEFAULT_LOOKAHEAD,
    DEFAULT_PART_GAP_NS,
    DEFAULT_SKEW_TOLERANCE_NS,
    DEFAULT_WINDOW_NS,
)
from .activity import Activity


class WorkerModel(str, Enum):
    """Concurrency model of a tier's server program."""
    ITERATIVE = "iterative"
    PROCESS_POOL = "process-pool"
    THREAD_POOL = "thread-pool"


class FaultKind(str, Enum):
    PROCESSING = "processing"
    LOCK = "lock"
    LINK = "link"


def _plain(items: Iterable[Tuple[str, Any]]) -> Dict[str, Any]:
    return {
        key: value.value if isinstance(value, Enum) else list(value) if isinstance(value, tuple) else value
        for key, value in items
    }


@dataclass
class Distribution:
    """Uniform duration in ``[base_ns, base_ns + jitter_ns]``."""
    base_ns: int
    jitter_ns: int = 0

    @classmethod
    def from_dict(cls, data: Dict) -> 'Distribution':
        return cls(base_ns=int(data['base_ns']), jitter_ns=int(data.get('jitter_ns', 0)))


@dataclass
class TierSpec:
    """One tier of the simulated service."""
    hostname: str
    ip: str
    program_name: str
    worker_model: WorkerModel = WorkerModel.THREAD_POOL
    pool_size: int = 1

    @classmethod
    def from_dict(cls, data: Dict) -> 'TierSpec':
        return cls(
            hostname=data['hostname'],
            ip=data['ip'],
            program_name=data['program_name'],
            worker_model=WorkerModel(data.get('worker_model', WorkerModel.THREAD_POOL.value)),
            pool_size=int(data.get('pool_size', 1))
        )


@dataclass
class TopologyConfig:
    """Tiers in call order; tier 0 listens on the entry port."""
    tiers: List[TierSpec]
    entry_port: int = 80
    inter_tier_ports: List[int] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: Dict) -> 'TopologyConfig':
        tiers = [TierSpec.from_dict(tier) for tier in data.get('tiers', [])]
        ports = [int(p) for p in data.get('inter_tier_ports', [])]
        if not ports:
            ports = [8080 + i for i in range(max(0, len(tiers) - 1))]
        return cls(tiers=tiers, entry_port=int(data.get('entry_port', 80)), inter_tier_ports=ports)

    def port_of(self, tier_index: int) -> int:
        if tier_index == 0:
            return self.entry_port
        return self.inter_tier_ports[tier_index - 1]

    @property
    def host_ips(self) -> List[str]:
        return [tier.ip for tier in self.tiers]


@dataclass
class RequestClass:
    """A kind of request: how deep it goes and how often each tier calls the next."""
    name: str
    weight: float = 1.0
    depth: Optional[int] = None
    calls: int = 1

    @classmethod
    def from_dict(cls, data: Dict) -> 'RequestClass':
        depth = data.get('depth')
        return cls(
            name=data['name'],
            weight=float(data.get('weight', 1.0)),
            depth=int(depth) if depth is not None else None,
            calls=int(data.get('calls', 1))
        )


@dataclass
class WorkloadConfig:
    """Closed-loop client population and per-tier service times."""
    num_clients: int
    requests_per_client: int
    service_times: List[Distribution]
    think_time: Distribution = field(default_factory=lambda: Distribution(1_000_000, 1_000_000))
    network_delay: Distribution = field(default_factory=lambda: Distribution(100_000, 50_000))
    request_classes: List[RequestClass] = field(default_factory=lambda: [RequestClass('default')])
    request_size: Tuple[int, int] = (200, 800)
    reply_size: Tuple[int, int] = (500, 4000)
    part_gap_ns: int = DEFAULT_PART_GAP_NS
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict) -> 'WorkloadConfig':
        defaults = cls(num_clients=1, requests_per_client=1, service_times=[])
        classes = [RequestClass.from_dict(c) for c in data.get('request_classes', [])]
        return cls(
            num_clients=int(data['num_clients']),
            requests_per_client=int(data['requests_per_client']),
            service_times=[Distribution.from_dict(s) for s in data.get('service_times', [])],
            think_time=Distribution.from_dict(data['think_time']) if 'think_time' in data else defaults.think_time,
            network_delay=Distribution.from_dict(data['network_delay']) if 'network_delay' in data else defaults.network_delay,
            request_classes=classes or defaults.request_classes,
            request_size=tuple(data.get('request_size', defaults.request_size)),
            reply_size=tuple(data.get('reply_size', defaults.reply_size)),
            part_gap_ns=int(data.get('part_gap_ns', defaults.part_gap_ns)),
            seed=int(data.get('seed', 0))
        )

    @property
    def total_requests(self) -> int:
        return self.num_clients * self.requests_per_client


@dataclass
class FaultInjection:
    """A performance problem injected into one tier or one inter-tier link."""
    tier: int
    added_ns: int
    kind: FaultKind = FaultKind.PROCESSING

    @classmethod
    def from_dict(cls, data: Dict) -> 'FaultInjection':
        return cls(
            tier=int(data['tier']),
            added_ns=int(data['added_ns']),
            kind=FaultKind(data.get('kind', FaultKind.PROCESSING.value))
        )


@dataclass
class DisturbanceConfig:
    """Everything that makes a trace harder to correlate."""
    clock_skew_per_node: Dict[str, int] = field(default_factory=dict)
    noise_activity_count: int = 0
    noise_program_names: List[str] = field(default_factory=lambda: ['sshd', 'rlogind'])
    shared_noise_fraction: float = 0.5
    message_split_probability: float = 0.0
    max_split_parts: int = 1
    faults: List[FaultInjection] = field(default_factory=list)
    drop_probability: float = 0.0
    concurrency_interleave: bool = False

    @classmethod
    def from_dict(cls, data: Optional[Dict]) -> 'DisturbanceConfig':
        data = data or {}
        defaults = cls()
        faults = [FaultInjection.from_dict(f) for f in data.get('faults', [])]
        if data.get('delay_injection'):
            faults.insert(0, FaultInjection.from_dict(data['delay_injection']))
        return cls(
            clock_skew_per_node={k: int(v) for k, v in data.get('clock_skew_per_node', {}).items()},
            noise_activity_count=int(data.get('noise_activity_count', 0)),
            noise_program_names=list(data.get('noise_program_names', defaults.noise_program_names)),
            shared_noise_fraction=float(data.get('shared_noise_fraction', defaults.shared_noise_fraction)),
            message_split_probability=float(data.get('message_split_probability', 0.0)),
            max_split_parts=int(data.get('max_split_parts', 1)),
            faults=faults,
            drop_probability=float(data.get('drop_probability', 0.0)),
            concurrency_interleave=bool(data.get('concurrency_interleave', False))
        )

    def tier_faults(self, tier_index: int) -> List[FaultInjection]:
        return [
            f for f in self.faults
            if f.tier == tier_index and f.kind in (FaultKind.PROCESSING, FaultKind.LOCK)
        ]

    def added_link_ns(self, upstream_tier: int) -> int:
        return sum(f.added_ns for f in self.faults if f.kind is FaultKind.LINK and f.tier == upstream_tier)


@dataclass
class SimulationConfig:
    """A complete simulator input document."""
    topology: TopologyConfig
    workload: WorkloadConfig
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)

    @classmethod
    def from_dict(cls, data: Dict) -> 'SimulationConfig':
        workload = dict(data['workload'])
        if 'seed' in data and 'seed' not in workload:
            workload['seed'] = data['seed']
        return cls(
            topology=TopologyConfig.from_dict(data['topology']),
            workload=WorkloadConfig.from_dict(workload),
            disturbance=DisturbanceConfig.from_dict(data.get('disturbance'))
        )

    def to_dict(self) -> Dict[str, Any]:
        """The resolved document, defaults filled in; ``from_dict`` reads it back."""
        return {'seed': self.seed, **asdict(self, dict_factory=_plain)}

    @property
    def seed(self) -> int:
        return self.workload.seed


@dataclass(frozen=True)
class AttributeFilter:
    """Drops activities whose program name, IP or port equals ``value``."""
    attribute: str
    value: str

    def matches(self, activity: Activity) -> bool:
        msg = activity.message
        if self.attribute == 'program_name':
            return activity.context.program_name == self.value
        if self.attribute == 'ip':
            return self.value in (msg.sender_ip, msg.receiver_ip)
        if self.attribute == 'port':
            return int(self.value) in (msg.sender_port, msg.receiver_port)
        return False

    @classmethod
    def parse(cls, text: str) -> 'AttributeFilter':
        """Build a filter from ``attribute=value``."""
        attribute, _, value = text.partition('=')
        return cls(attribute=attribute.strip(), value=value.strip())

    @classmethod
    def from_dict(cls, data: Dict) -> 'AttributeFilter':
        (attribute, value), = data.items()
        return cls(attribute=attribute, value=str(value))


@dataclass
class RankerConfig:
    """Sliding-window and disturbance settings of the ranker."""
    window_ns: int = DEFAULT_WINDOW_NS
    attribute_filters: List[AttributeFilter] = field(default_factory=list)
    swap_lookahead: int = DEFAULT_LOOKAHEAD
    skew_tolerance_ns: int = DEFAULT_SKEW_TOLERANCE_NS
    resolve_stalls: bool = True

    def is_filtered(self, activity: Activity) -> bool:
        return any(f.matches(activity) for f in self.attribute_filters)


@dataclass
class CorrelatorConfig:
    """Correlator input document: boundary detection plus ranker settings."""
    entry_ports: FrozenSet[int]
    internal_hosts: FrozenSet[str]
    ranker: RankerConfig = field(default_factory=RankerConfig)
    deformed_frequency: float = DEFAULT_DEFORMED_FREQUENCY
    require_shape_anomaly: bool = True

    @classmethod
    def from_dict(cls, data: Dict) -> 'CorrelatorConfig':
        ranker = RankerConfig(
            window_ns=int(data.get('window_ns', DEFAULT_WINDOW_NS)),
            attribute_filters=[AttributeFilter.from_dict(f) for f in data.get('filters', [])],
            swap_lookahead=int(data.get('lookahead', DEFAULT_LOOKAHEAD)),
            skew_tolerance_ns=int(data.get('skew_tolerance_ns', DEFAULT_SKEW_TOLERANCE_NS)),
            resolve_stalls=bool(data.get('resolve_stalls', True))
        )
        return cls(
            entry_ports=frozenset(int(p) for p in data.get('entry_ports', [])),
            internal_hosts=frozenset(data.get('internal_hosts', [])),
            ranker=ranker,
            deformed_frequency=float(data.get('deformed_frequency', DEFAULT_DEFORMED_FREQUENCY)),
            require_shape_anomaly=bool(data.get('require_shape_anomaly', True))
        )

    def to_dict(self) -> Dict:
        return {
            'entry_ports': sorted(self.entry_ports),
            'internal_hosts': sorted(self.internal_hosts),
            'window_ns': self.ranker.window_ns,
            'filters': [
                {f.attribute: int(f.value) if f.attribute == 'port' else f.value}
                for f in self.ranker.attribute_filters
            ],
            'lookahead': self.ranker.swap_lookahead,
            'skew_tolerance_ns': self.ranker.skew_tolerance_ns,
            'resolve_stalls': self.ranker.resolve_stalls,
            'deformed_frequency': self.deformed_frequency,
            'require_shape_anomaly': self.require_shape_anomaly
        }
