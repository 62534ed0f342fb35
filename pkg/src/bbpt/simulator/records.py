"""Simulator output records and their assembly into per-node logs."""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Tuple

from ..models.activity import Activity, serialize_activity
from ..models.ground_truth import GroundTruth
from ..utils.constants import NOISE_REQUEST_ID


@dataclass
class SimRecord:
    """One activity as emitted by the simulator, before clocks are applied.

    ``cpu_offset`` models a timestamp taken on a CPU whose clock disagrees
    with the rest of its node.
    """
    node: str
    activity: Activity
    true_time: int
    request_id: str
    order: int = 0
    cpu_offset: int = 0

    @property
    def is_noise(self) -> bool:
        return self.request_id == NOISE_REQUEST_ID


@dataclass
class SimulationResult:
    """Per-node logs (located activities) with their ground truth."""
    logs: Dict[str, List[Activity]]
    ground_truth: GroundTruth
    request_classes: Dict[str, str] = field(default_factory=dict)

    def log_lines(self, node: str) -> List[str]:
        return [serialize_activity(a) for a in self.logs[node]]

    @property
    def activity_count(self) -> int:
        return sum(len(log) for log in self.logs.values())


def assemble_logs(
    records: Iterable[SimRecord],
    nodes: Iterable[str],
    clock_skew: Mapping[str, int],
    messages: Mapping[str, List[Tuple[int, int]]],
    request_classes: Mapping[str, str],
) -> SimulationResult:
    """Apply node clocks, sort each node log by local time and build the ground truth."""
    by_node: Dict[str, List[Tuple[int, int, SimRecord]]] = {node: [] for node in nodes}
    for record in records:
        local = record.true_time + clock_skew.get(record.node, 0) + record.cpu_offset
        by_node.setdefault(record.node, []).append((local, record.order, record))

    logs: Dict[str, List[Activity]] = {}
    truth = GroundTruth()
    for node in sorted(by_node):
        entries = sorted(by_node[node], key=lambda e: (e[0], e[1]))
        log = []
        for seq, (local, _, record) in enumerate(entries):
            activity = record.activity.with_timestamp(local).located(node, seq)
            log.append(activity)
            truth.assign(activity.ref, record.request_id, record.true_time)
        logs[node] = log

    for request_id, request in truth.requests.items():
        order = sorted(range(len(request.activities)), key=lambda i: request.true_times[i])
        request.activities = [request.activities[i] for i in order]
        request.true_times = [request.true_times[i] for i in order]
        request.messages = list(messages.get(request_id, []))
        request.request_class = request_classes.get(request_id, "")
    return SimulationResult(logs=logs, ground_truth=truth, request_classes=dict(request_classes))
