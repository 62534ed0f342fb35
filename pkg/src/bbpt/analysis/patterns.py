"""Groups CAGs by shape and averages each group into one causal path."""

import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..errors import IncompletePath, PatternMismatch
from ..models.activity import ActivityType
from ..models.cag import CAG, EdgeKind, validate_cag
from ..utils.constants import DEFAULT_DEFORMED_FREQUENCY

logger = logging.getLogger(__name__)

_KIND_MARK = {EdgeKind.CONTEXT: "c", EdgeKind.MESSAGE: "m"}


@dataclass(frozen=True)
class PatternSignature:
    """Canonical text of a CAG's shape.

    Vertices are listed in the CAG's canonical order as
    ``TYPE@host/program``; edges as ``parent-c>child`` or ``parent-m>child``.
    Process and thread ids are left out so pooled workers share patterns.
    """
    text: str

    @classmethod
    def of(cls, cag: CAG) -> 'PatternSignature':
        order = cag.canonical_order()
        index = {id(v): i for i, v in enumerate(order)}
        vertices = ";".join(f"{t}@{h}/{p}" for t, h, p in (v.label for v in order))
        edges = ";".join(f"{p}-{_KIND_MARK[k]}>{c}" for p, c, k in cag.typed_edges(index))
        return cls(f"{cag.status.value}|{vertices}|{edges}")

    @property
    def short_id(self) -> str:
        return hashlib.sha1(self.text.encode()).hexdigest()[:12]

    def __str__(self) -> str:
        return self.text


@dataclass
class PathPattern:
    signature: PatternSignature
    member_ids: List[str]
    deformed: bool = False
    anomalies: List[str] = field(default_factory=list)
    members: List[CAG] = field(default_factory=list, repr=False)

    @property
    def count(self) -> int:
        return len(self.member_ids)

    @property
    def id(self) -> str:
        return self.signature.short_id

    @property
    def representative(self) -> CAG:
        return self.members[0]

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'signature': self.signature.text,
            'count': self.count,
            'deformed': self.deformed,
            'anomalies': self.anomalies,
            'members': self.member_ids,
        }


def shape_anomalies(cag: CAG) -> List[str]:
    """Structural reasons a CAG cannot be a whole request path."""
    problems = []
    if not cag.is_complete:
        problems.append("no END")
    problems.extend(validate_cag(cag))
    for vertex in cag.vertices:
        if vertex is not cag.root and vertex.parent_count == 0:
            problems.append(f"{vertex.parts[0]} is detached from the root")
        if (
            vertex.activity_type is not ActivityType.END
            and vertex.context_child is None
            and vertex.message_child is None
        ):
            problems.append(f"{vertex.activity_type.name} {vertex.parts[0]} leads nowhere")
    return problems


def classify(
    cags: Iterable[CAG],
    deformed_frequency: float = DEFAULT_DEFORMED_FREQUENCY,
    require_shape_anomaly: bool = True,
) -> List[PathPattern]:
    """Partition CAGs into patterns of identical shape, most frequent first.

    A pattern is deformed when its share of all CAGs is below
    ``deformed_frequency`` and, if ``require_shape_anomaly`` is set, its
    representative is structurally broken as well.
    """
    groups: Dict[PatternSignature, List[CAG]] = defaultdict(list)
    total = 0
    for cag in cags:
        groups[PatternSignature.of(cag)].append(cag)
        total += 1

    patterns = []
    for signature, members in groups.items():
        members.sort(key=lambda c: c.sort_key)
        anomalies = shape_anomalies(members[0])
        rare = total > 0 and len(members) / total < deformed_frequency
        deformed = rare and (bool(anomalies) or not require_shape_anomaly)
        patterns.append(PathPattern(
            signature=signature,
            member_ids=[c.id for c in members],
            deformed=deformed,
            anomalies=anomalies,
            members=members,
        ))
    patterns.sort(key=lambda p: (-p.count, p.signature.text))
    logger.info("classified %d CAGs into %d patterns (%d deformed)",
                total, len(patterns), sum(p.deformed for p in patterns))
    return patterns


@dataclass
class EdgeLatency:
    """Latency samples of one edge of an average path."""
    parent: int
    child: int
    kind: EdgeKind
    mean_ns: float
    min_ns: int
    max_ns: int
    samples: int

    def to_dict(self) -> Dict:
        return {
            'parent': self.parent,
            'child': self.child,
            'kind': self.kind.value,
            'mean_ns': self.mean_ns,
            'min_ns': self.min_ns,
            'max_ns': self.max_ns,
            'samples': self.samples,
        }


@dataclass
class AverageCausalPath:
    """A pattern's shape with latencies averaged edge by edge.

    Vertex indices refer to the representative's canonical order.
    """
    pattern_id: str
    signature: PatternSignature
    representative: CAG = field(repr=False)
    edges: List[EdgeLatency]
    count: int
    end_to_end_ns: float

    def edge(self, parent: int, child: int) -> Optional[EdgeLatency]:
        for e in self.edges:
            if e.parent == parent and e.child == child:
                return e
        return None

    def to_dict(self) -> Dict:
        order = self.representative.canonical_order()
        return {
            'pattern': self.pattern_id,
            'count': self.count,
            'end_to_end_ns': self.end_to_end_ns,
            'vertices': [
                {'id': i, 'type': t, 'hostname': h, 'program_name': p}
                for i, (t, h, p) in enumerate(v.label for v in order)
            ],
            'edges': [e.to_dict() for e in self.edges],
        }


def _edge_latencies(cag: CAG) -> Tuple[List[Tuple[int, int, EdgeKind]], List[int]]:
    order = cag.canonical_order()
    index = {id(v): i for i, v in enumerate(order)}
    edges = cag.typed_edges(index)
    return edges, [order[c].timestamp - order[p].timestamp for p, c, _ in edges]


def average_path(pattern: PathPattern, member_cags: Optional[List[CAG]] = None) -> AverageCausalPath:
    """Average every edge's latency over the pattern's complete members."""
    members = [c for c in (member_cags if member_cags is not None else pattern.members) if c.is_complete]
    if not members:
        raise IncompletePath(f"pattern {pattern.id} has no complete member")

    edges, _ = _edge_latencies(members[0])
    samples = np.empty((len(members), len(edges)), dtype=np.int64)
    durations = np.empty(len(members), dtype=np.int64)
    for row, cag in enumerate(members):
        if PatternSignature.of(cag) != pattern.signature:
            raise PatternMismatch(f"CAG {cag.id} does not have the shape of pattern {pattern.id}")
        _, latencies = _edge_latencies(cag)
        samples[row] = latencies
        durations[row] = cag.end.timestamp - cag.root.timestamp

    return AverageCausalPath(
        pattern_id=pattern.id,
        signature=pattern.signature,
        representative=members[0],
        edges=[
            EdgeLatency(
                parent=p,
                child=c,
                kind=kind,
                mean_ns=float(samples[:, j].mean()),
                min_ns=int(samples[:, j].min()),
                max_ns=int(samples[:, j].max()),
                samples=len(members),
            )
            for j, (p, c, kind) in enumerate(edges)
        ],
        count=len(members),
        end_to_end_ns=float(durations.mean()),
    )
