"""Latency percentages of the components along a causal path."""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

from ..errors import IncompletePath
from ..models.cag import CAG, EdgeKind
from .patterns import AverageCausalPath, PathPattern, PatternSignature, average_path


@dataclass
class Segment:
    label: str
    parent: int
    child: int
    kind: EdgeKind
    mean_ns: float
    # None for edges off the critical path
    percentage: Optional[float]
    cross_node: bool

    @property
    def critical(self) -> bool:
        return self.percentage is not None

    def to_dict(self) -> Dict:
        return {
            'label': self.label,
            'parent': self.parent,
            'child': self.child,
            'kind': self.kind.value,
            'mean_ns': self.mean_ns,
            'percentage': self.percentage,
            'cross_node': self.cross_node,
            'critical': self.critical,
        }


@dataclass
class LatencyReport:
    """Segments of a path in critical-path order, then the overlapped ones.

    Percentages are relative to the BEGIN-to-END duration on the entry node.
    Cross-node segments mix two clocks and carry any skew between them.
    """
    pattern_id: str
    count: int
    end_to_end_ns: float
    segments: List[Segment] = field(default_factory=list)

    @property
    def critical_segments(self) -> List[Segment]:
        return [s for s in self.segments if s.critical]

    def by_label(self) -> Dict[str, float]:
        """Percentage per segment label, summed over the critical path."""
        totals: Dict[str, float] = OrderedDict()
        for segment in self.critical_segments:
            totals[segment.label] = totals.get(segment.label, 0.0) + segment.percentage
        return dict(totals)

    def dominant(self) -> Optional[str]:
        labels = self.by_label()
        return max(labels, key=labels.get) if labels else None

    def to_dict(self) -> Dict:
        return {
            'pattern': self.pattern_id,
            'count': self.count,
            'end_to_end_ns': self.end_to_end_ns,
            'segments': [s.to_dict() for s in self.segments],
            'by_label': self.by_label(),
        }


def _programs_label(parent_program: str, child_program: str) -> str:
    return f"{parent_program}2{child_program}"


def latency_percentages(path: Union[AverageCausalPath, CAG]) -> LatencyReport:
    """Split the end-to-end latency of a path into labelled segments.

    The critical path is walked back from END, taking a vertex's message
    parent before its context parent, so its segments add up to the whole
    BEGIN-to-END duration.
    """
    if isinstance(path, CAG):
        if not path.is_complete:
            raise IncompletePath(f"CAG {path.id} has no END")
        signature = PatternSignature.of(path)
        path = average_path(PathPattern(signature, [path.id], members=[path]))

    cag = path.representative
    if cag.end is None:
        raise IncompletePath(f"pattern {path.pattern_id} has no END")
    order = cag.canonical_order()
    index = {id(v): i for i, v in enumerate(order)}

    critical = []
    vertex = cag.end
    while vertex is not cag.root:
        parent = vertex.message_parent or vertex.context_parent
        if parent is None:
            raise IncompletePath(f"pattern {path.pattern_id}: {vertex.parts[0]} is cut off from BEGIN")
        critical.append((index[id(parent)], index[id(vertex)]))
        vertex = parent
    critical.reverse()
    on_path = set(critical)

    total = path.end_to_end_ns
    segments_by_edge = {}
    for edge in path.edges:
        parent, child = order[edge.parent], order[edge.child]
        label = _programs_label(parent.activity.context.program_name, child.activity.context.program_name)
        percentage = None
        if (edge.parent, edge.child) in on_path:
            percentage = 100.0 * edge.mean_ns / total if total else 0.0
        segments_by_edge[(edge.parent, edge.child)] = Segment(
            label=label,
            parent=edge.parent,
            child=edge.child,
            kind=edge.kind,
            mean_ns=edge.mean_ns,
            percentage=percentage,
            cross_node=parent.activity.context.hostname != child.activity.context.hostname,
        )

    segments = [segments_by_edge.pop(e) for e in critical]
    segments.extend(sorted(segments_by_edge.values(), key=lambda s: (s.parent, s.child)))
    return LatencyReport(path.pattern_id, path.count, total, segments)


@dataclass
class ReportComparison:
    deltas: Dict[str, float]
    largest_increase: Optional[str]

    def to_dict(self) -> Dict:
        return {'deltas': self.deltas, 'largest_increase': self.largest_increase}


def compare_reports(baseline: LatencyReport, other: LatencyReport) -> ReportComparison:
    """Percentage-point change per segment label from ``baseline`` to ``other``."""
    before, after = baseline.by_label(), other.by_label()
    labels = list(before) + [label for label in after if label not in before]
    deltas = {label: after.get(label, 0.0) - before.get(label, 0.0) for label in labels}
    largest = max(deltas, key=deltas.get) if deltas else None
    return ReportComparison(deltas, largest)
