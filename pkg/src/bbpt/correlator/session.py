"""One correlation run: node logs -> ranker -> engine -> CAGs."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping

from ..models.activity import Activity, LogReader
from ..models.cag import CAG, CagStatus
from ..models.config import CorrelatorConfig
from ..utils.file_utils import list_node_logs, open_node_log
from .engine import CorrelationEngine, EngineStats
from .ranker import Ranker, RankerStats

logger = logging.getLogger(__name__)


@dataclass
class CorrelationResult:
    cags: List[CAG]
    ranker: RankerStats
    engine: EngineStats
    activities_read: int = 0
    malformed_lines: int = 0
    sources: List[str] = field(default_factory=list)

    @property
    def complete(self) -> List[CAG]:
        return [c for c in self.cags if c.status is CagStatus.COMPLETE]

    @property
    def incomplete(self) -> List[CAG]:
        return [c for c in self.cags if c.status is CagStatus.INCOMPLETE]

    def flush_report(self) -> Dict:
        return {
            'cags_complete': len(self.complete),
            'cags_incomplete': [c.id for c in self.incomplete],
            'malformed_lines': self.malformed_lines,
            'ranker': self.ranker.to_dict(),
            'engine': self.engine.to_dict(),
        }

    def counters(self) -> Dict[str, int]:
        """Per-stage counters; read == correlated + discarded + orphaned."""
        return {
            'activities_read': self.activities_read,
            'malformed_lines': self.malformed_lines,
            'filtered': self.ranker.filtered,
            'noise_discarded': self.ranker.noise_discarded,
            'dangling_discarded': self.ranker.dangling_discarded,
            'correlated': self.engine.correlated,
            'orphaned': self.engine.orphaned,
            'swaps': self.ranker.swaps,
            'cags_emitted': len(self.cags),
            'cags_incomplete': len(self.incomplete),
        }


def correlate_streams(
    streams: Mapping[str, Iterable[Activity]],
    config: CorrelatorConfig,
) -> CorrelationResult:
    """Correlate already located activities, one iterable per log source.

    Activities must already be classified as BEGIN/END where they cross the
    service boundary.
    """
    engine = CorrelationEngine()
    ranker = Ranker(streams, config.ranker, engine.mmap)
    cags = sorted(engine.correlate(ranker), key=lambda c: c.sort_key)
    logger.info(
        "correlated %d activities into %d CAGs (%d incomplete)",
        engine.stats.correlated, len(cags), engine.stats.incomplete_flushed,
    )
    return CorrelationResult(
        cags=cags,
        ranker=ranker.stats,
        engine=engine.stats,
        activities_read=ranker.stats.enqueued + ranker.stats.filtered,
        sources=list(ranker.queues.nodes),
    )


def correlate_lines(
    logs: Mapping[str, Iterable[str]],
    config: CorrelatorConfig,
) -> CorrelationResult:
    """Correlate raw log lines keyed by node name."""
    readers = {
        node: LogReader(node, lines, config.entry_ports, config.internal_hosts)
        for node, lines in logs.items()
    }
    result = correlate_streams(readers, config)
    result.malformed_lines = sum(r.malformed for r in readers.values())
    for reader in readers.values():
        if reader.last_error is not None:
            logger.warning("%s: skipped %d malformed lines, last: %s",
                           reader.source, reader.malformed, reader.last_error)
    return result


def correlate_directory(log_dir: Path, config: CorrelatorConfig) -> CorrelationResult:
    """Correlate every ``*.log`` file in ``log_dir``; the node name is the file stem."""
    paths = list_node_logs(log_dir)
    handles = {path.stem: open_node_log(path) for path in paths}
    try:
        return correlate_lines(handles, config)
    finally:
        for handle in handles.values():
            handle.close()
