"""Runs the whole analysis over one CAG collection."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List

from ..errors import IncompletePath
from ..models.cag import CAG
from ..utils.constants import DEFAULT_DEFORMED_FREQUENCY
from .latency import LatencyReport, latency_percentages
from .patterns import AverageCausalPath, PathPattern, average_path, classify

logger = logging.getLogger(__name__)


@dataclass
class AnalysisResult:
    patterns: List[PathPattern]
    averages: Dict[str, AverageCausalPath] = field(default_factory=dict)
    reports: Dict[str, LatencyReport] = field(default_factory=dict)

    @property
    def normal(self) -> List[PathPattern]:
        return [p for p in self.patterns if not p.deformed]

    @property
    def deformed(self) -> List[PathPattern]:
        return [p for p in self.patterns if p.deformed]

    def counters(self) -> Dict[str, int]:
        return {
            'patterns': len(self.patterns),
            'deformed_patterns': len(self.deformed),
            'cags_in_normal_patterns': sum(p.count for p in self.normal),
            'cags_in_deformed_patterns': sum(p.count for p in self.deformed),
        }


def analyze(
    cags: Iterable[CAG],
    deformed_frequency: float = DEFAULT_DEFORMED_FREQUENCY,
    require_shape_anomaly: bool = True,
) -> AnalysisResult:
    """Classify, then average and decompose every normal pattern."""
    result = AnalysisResult(classify(cags, deformed_frequency, require_shape_anomaly))
    for pattern in result.normal:
        try:
            path = average_path(pattern)
            report = latency_percentages(path)
        except IncompletePath as e:
            logger.info("no latency report for pattern %s: %s", pattern.id, e)
            continue
        result.averages[pattern.id] = path
        result.reports[pattern.id] = report
    return result
