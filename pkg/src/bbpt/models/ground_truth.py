"""True request membership of every emitted activity."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

from ..utils.constants import NOISE_REQUEST_ID
from .activity import ActivityRef


@dataclass
class RequestTruth:
    """Activities of one request in true-time order."""
    request_id: str
    request_class: str = ""
    activities: List[ActivityRef] = field(default_factory=list)
    true_times: List[int] = field(default_factory=list)
    # (last send part, first receive part) true times per message between logged nodes
    messages: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def activity_set(self) -> frozenset:
        return frozenset(self.activities)

    @property
    def true_latency_ns(self) -> int:
        if not self.true_times:
            return 0
        return max(self.true_times) - min(self.true_times)


@dataclass
class GroundTruth:
    """Sidecar mapping ``(node, ingest_seq)`` to a request id or the noise marker.

    The sidecar file holds one ``node seq request_id true_time`` line per
    activity. Message timings and request classes are kept in memory only.
    """
    assignments: Dict[ActivityRef, str] = field(default_factory=dict)
    true_times: Dict[ActivityRef, int] = field(default_factory=dict)
    requests: Dict[str, RequestTruth] = field(default_factory=dict)

    def assign(self, ref: ActivityRef, request_id: str, true_time: int = 0) -> None:
        self.assignments[ref] = request_id
        self.true_times[ref] = true_time
        if request_id == NOISE_REQUEST_ID:
            return
        truth = self.requests.setdefault(request_id, RequestTruth(request_id))
        truth.activities.append(ref)
        truth.true_times.append(true_time)

    def request_of(self, ref: ActivityRef) -> str:
        return self.assignments.get(ref, NOISE_REQUEST_ID)

    @property
    def noise_count(self) -> int:
        return sum(1 for rid in self.assignments.values() if rid == NOISE_REQUEST_ID)

    def to_lines(self) -> List[str]:
        ordered = sorted(self.assignments.items())
        return [f"{ref.source} {ref.ingest_seq} {rid} {self.true_times.get(ref, 0)}" for ref, rid in ordered]

    def write(self, path: Path) -> None:
        with open(path, 'w', encoding='utf-8') as f:
            for line in self.to_lines():
                f.write(line + "\n")

    @classmethod
    def read(cls, path: Path) -> 'GroundTruth':
        truth = cls()
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                fields = line.split()
                if len(fields) not in (3, 4):
                    continue
                node, seq, rid = fields[:3]
                true_time = int(fields[3]) if len(fields) == 4 else 0
                truth.assign(ActivityRef(node, int(seq)), rid, true_time)
        for request in truth.requests.values():
            pairs = sorted(zip(request.true_times, request.activities))
            request.true_times = [t for t, _ in pairs]
            request.activities = [ref for _, ref in pairs]
        return truth
