"""Writers for analysis output: pattern JSON, text report, CSV and DOT."""

import csv
import io
from typing import Any, Dict

import graphviz

from ..analysis.latency import LatencyReport
from ..analysis.patterns import AverageCausalPath
from ..analysis.report import AnalysisResult
from ..models.cag import EdgeKind
from ..utils.constants import NS_PER_MS, PATTERNS_FILE, REPORT_TEXT_FILE, SEGMENTS_CSV_FILE
from .base_exporter import BaseExporter


class PatternsExporter(BaseExporter):
    """Patterns with their average paths and latency reports."""

    def __init__(self, result: AnalysisResult):
        self.result = result

    def get_output_filename(self) -> str:
        return PATTERNS_FILE

    def generate(self) -> Dict[str, Any]:
        patterns = []
        for pattern in self.result.patterns:
            entry = pattern.to_dict()
            if pattern.id in self.result.averages:
                entry['average_path'] = self.result.averages[pattern.id].to_dict()
                entry['latency'] = self.result.reports[pattern.id].to_dict()
            patterns.append(entry)
        return {'patterns': patterns, 'counters': self.result.counters()}


class TextReportExporter(BaseExporter):
    """Aligned-column latency report, normal patterns first."""

    def __init__(self, result: AnalysisResult):
        self.result = result

    def get_output_filename(self) -> str:
        return REPORT_TEXT_FILE

    def generate(self) -> str:
        lines = []
        for pattern in self.result.normal:
            lines.append(f"pattern {pattern.id}  count {pattern.count}")
            report = self.result.reports.get(pattern.id)
            if report is None:
                lines.append("  no complete member")
                lines.append("")
                continue
            lines.append(f"  end-to-end {report.end_to_end_ns / NS_PER_MS:.3f} ms")
            lines.append(f"  {'segment':<24}{'kind':<9}{'mean_ns':>14}{'pct':>9}  note")
            for segment in report.segments:
                pct = f"{segment.percentage:.1f}%" if segment.critical else "-"
                notes = []
                if not segment.critical:
                    notes.append("overlapped")
                if segment.cross_node:
                    notes.append("cross-node")
                lines.append(
                    f"  {segment.label:<24}{segment.kind.value:<9}"
                    f"{segment.mean_ns:>14.0f}{pct:>9}  {', '.join(notes)}".rstrip()
                )
            lines.append("")

        deformed = self.result.deformed
        lines.append(f"deformed patterns: {len(deformed)}")
        for pattern in deformed:
            reasons = "; ".join(pattern.anomalies) or "rare shape"
            lines.append(f"  {pattern.id}  count {pattern.count}  {reasons}")
        return "\n".join(lines) + "\n"


class SegmentsCsvExporter(BaseExporter):
    """One row per (pattern, segment) for external plotting."""

    def __init__(self, result: AnalysisResult):
        self.result = result

    def get_output_filename(self) -> str:
        return SEGMENTS_CSV_FILE

    def generate(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(['pattern', 'segment', 'kind', 'mean_ns', 'pct', 'critical', 'cross_node'])
        for pattern_id, report in self.result.reports.items():
            for segment in report.segments:
                writer.writerow([
                    pattern_id,
                    segment.label,
                    segment.kind.value,
                    f"{segment.mean_ns:.1f}",
                    "" if segment.percentage is None else f"{segment.percentage:.3f}",
                    int(segment.critical),
                    int(segment.cross_node),
                ])
        return buffer.getvalue()


class DotExporter(BaseExporter):
    """Graphviz source of an average causal path.

    Context edges are solid and message edges dashed; critical edges carry
    their share of the end-to-end latency.
    """

    def __init__(self, path: AverageCausalPath, report: LatencyReport):
        self.path = path
        self.report = report

    def get_output_filename(self) -> str:
        return f"pattern-{self.path.pattern_id}.dot"

    def generate(self) -> str:
        dot = graphviz.Digraph(name=f"pattern_{self.path.pattern_id}", graph_attr={"rankdir": "TB"})
        order = self.path.representative.canonical_order()
        for i, vertex in enumerate(order):
            kind, host, program = vertex.label
            dot.node(f"v{i}", label=f"{kind}\\n{host}/{program}", shape="box")
        segments = {(s.parent, s.child): s for s in self.report.segments}
        for edge in self.path.edges:
            segment = segments[(edge.parent, edge.child)]
            label = f"{edge.mean_ns / 1000:.1f}us"
            if segment.critical:
                label += f" ({segment.percentage:.1f}%)"
            dot.edge(
                f"v{edge.parent}",
                f"v{edge.child}",
                label=label,
                style="dashed" if edge.kind is EdgeKind.MESSAGE else "solid",
            )
        return dot.source
