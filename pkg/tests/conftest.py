"""Shared builders for tests: small topologies, workloads and activities."""

from typing import Dict, List

import pytest

from bbpt.correlator.engine import CorrelationEngine
from bbpt.correlator.session import CorrelationResult, correlate_lines
from bbpt.models.cag import CAG
from bbpt.models.activity import Activity, ActivityType, ContextId, MessageId
from bbpt.models.config import (
    CorrelatorConfig,
    DisturbanceConfig,
    Distribution,
    RankerConfig,
    RequestClass,
    TierSpec,
    TopologyConfig,
    WorkerModel,
    WorkloadConfig,
)
from bbpt.simulator.noise import SHARED_NOISE_CLIENT_IP
from bbpt.simulator.records import SimulationResult
from bbpt.simulator.workload import generate
from bbpt.utils.constants import NS_PER_MS, NS_PER_US

TIERS = [
    TierSpec('web1', '10.0.0.1', 'httpd', WorkerModel.PROCESS_POOL, 4),
    TierSpec('app1', '10.0.0.2', 'java', WorkerModel.THREAD_POOL, 4),
    TierSpec('db1', '10.0.0.3', 'mysqld', WorkerModel.THREAD_POOL, 2),
]


def make_topology(tiers: int = 3, worker_model: WorkerModel = None, pool_size: int = None) -> TopologyConfig:
    specs = []
    for spec in TIERS[:tiers]:
        specs.append(TierSpec(
            spec.hostname,
            spec.ip,
            spec.program_name,
            worker_model or spec.worker_model,
            pool_size or spec.pool_size,
        ))
    return TopologyConfig(tiers=specs, entry_port=80, inter_tier_ports=[8080, 3306][:tiers - 1])


def make_workload(
    tiers: int = 3,
    num_clients: int = 5,
    requests_per_client: int = 4,
    seed: int = 7,
    jitter_ns: int = 200 * NS_PER_US,
    **kwargs,
) -> WorkloadConfig:
    service = [Distribution(base, jitter_ns) for base in (400 * NS_PER_US, 2 * NS_PER_MS, 800 * NS_PER_US)]
    return WorkloadConfig(
        num_clients=num_clients,
        requests_per_client=requests_per_client,
        service_times=service[:tiers],
        think_time=kwargs.pop('think_time', Distribution(NS_PER_MS, NS_PER_MS)),
        network_delay=kwargs.pop('network_delay', Distribution(100 * NS_PER_US, 50 * NS_PER_US)),
        seed=seed,
        **kwargs,
    )


def correlator_for(topology: TopologyConfig, **ranker) -> CorrelatorConfig:
    return CorrelatorConfig(
        entry_ports=frozenset([topology.entry_port]),
        internal_hosts=frozenset(topology.host_ips + [SHARED_NOISE_CLIENT_IP]),
        ranker=RankerConfig(**ranker),
    )


def correlate_simulation(result: SimulationResult, config: CorrelatorConfig) -> CorrelationResult:
    return correlate_lines({node: result.log_lines(node) for node in result.logs}, config)


def simulate(tiers: int = 3, disturbance: DisturbanceConfig = None, topology: TopologyConfig = None,
             **workload) -> SimulationResult:
    topology = topology or make_topology(tiers)
    return generate(topology, make_workload(tiers=len(topology.tiers), **workload), disturbance)


def activity(
    kind: ActivityType,
    timestamp: int,
    host: str,
    program: str,
    tid: int,
    channel: tuple,
    size: int,
    seq: int,
    pid: int = None,
) -> Activity:
    """A located activity on node ``host`` with line index ``seq``."""
    return Activity(
        kind,
        timestamp,
        ContextId(host, program, pid if pid is not None else tid, tid),
        MessageId(*channel, size),
    ).located(host, seq)


@pytest.fixture
def topology() -> TopologyConfig:
    return make_topology()


@pytest.fixture
def correlator(topology) -> CorrelatorConfig:
    return correlator_for(topology)


class FakeMessageIndex:
    """Stands in for the engine's message index in ranker tests."""

    def __init__(self, outstanding: Dict[tuple, int] = None):
        self.entries = dict(outstanding or {})

    def outstanding(self, channel) -> int:
        return self.entries.get(channel, 0)


@pytest.fixture
def fake_mmap() -> FakeMessageIndex:
    return FakeMessageIndex()


def two_tier_request(start: int = 1000, tid: int = 11, client_port: int = 51234, call_port: int = 45000,
                     seq0: int = 0) -> Dict[str, List[Activity]]:
    """One request through web1 (httpd) and app1 (java), already classified."""
    client = ('172.16.0.1', client_port)
    web = ('10.0.0.1', 80)
    call = ('10.0.0.1', call_port)
    app = ('10.0.0.2', 8080)
    return {
        'web1': [
            activity(ActivityType.BEGIN, start, 'web1', 'httpd', tid, (*client, *web), 300, seq0),
            activity(ActivityType.SEND, start + 100, 'web1', 'httpd', tid, (*call, *app), 200, seq0 + 1),
            activity(ActivityType.RECEIVE, start + 900, 'web1', 'httpd', tid, (*app, *call), 700, seq0 + 2),
            activity(ActivityType.END, start + 1000, 'web1', 'httpd', tid, (*web, *client), 900, seq0 + 3),
        ],
        'app1': [
            activity(ActivityType.RECEIVE, start + 200, 'app1', 'java', 21, (*call, *app), 200, seq0),
            activity(ActivityType.SEND, start + 800, 'app1', 'java', 21, (*app, *call), 700, seq0 + 1),
        ],
    }


def correlate_in_time_order(activities: List[Activity]) -> List[CAG]:
    return list(CorrelationEngine().correlate(sorted(activities, key=lambda a: a.timestamp)))


def two_tier_cag(web_times=(0, 10, 80, 100), app_times=(20, 66), n: int = 0, keep_end: bool = True) -> CAG:
    """The n-th two-tier request with chosen local times (web: B S R E, app: R S)."""
    request = two_tier_request(tid=11 + n, client_port=51000 + n, call_port=45000 + n, seq0=6 * n)
    web = [a.with_timestamp(t + 10**6 * n) for a, t in zip(request['web1'], web_times)]
    app = [a.with_timestamp(t + 10**6 * n) for a, t in zip(request['app1'], app_times)]
    if not keep_end:
        web = web[:-1]
    (cag,) = correlate_in_time_order(web + app)
    return cag


def one_tier_cag(duration: int, n: int = 0) -> CAG:
    start = 10**9 + 10**6 * n
    client = ('172.16.1.1', 52000 + n)
    web = ('10.0.0.1', 80)
    (cag,) = correlate_in_time_order([
        activity(ActivityType.BEGIN, start, 'web1', 'httpd', 7, (*client, *web), 300, 2 * n),
        activity(ActivityType.END, start + duration, 'web1', 'httpd', 7, (*web, *client), 900, 2 * n + 1),
    ])
    return cag
