"""Path accuracy against the simulator's ground truth."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Set, Tuple

from ..models.cag import CAG
from ..models.ground_truth import GroundTruth
from ..utils.constants import NOISE_REQUEST_ID

logger = logging.getLogger(__name__)


@dataclass
class AccuracyReport:
    """Correct paths over all logged requests, with what went wrong."""
    correct: int
    total: int
    missing: List[str] = field(default_factory=list)
    mixed: List[Tuple[str, List[str]]] = field(default_factory=list)
    partial: List[Tuple[str, str, int, int]] = field(default_factory=list)

    @property
    def vacuous(self) -> bool:
        return self.total == 0

    @property
    def accuracy(self) -> float:
        return 1.0 if self.vacuous else self.correct / self.total

    def mismatch_lines(self) -> List[str]:
        lines = [f"missing {rid}" for rid in self.missing]
        lines += [f"mixed {cag_id} {' '.join(rids)}" for cag_id, rids in self.mixed]
        lines += [
            f"partial {cag_id} {rid} ({have} of {want} activities)"
            for cag_id, rid, have, want in self.partial
        ]
        if self.vacuous:
            lines.append("ground truth holds no requests")
        return lines

    def to_dict(self) -> Dict:
        return {
            'accuracy': self.accuracy,
            'correct': self.correct,
            'total': self.total,
            'missing': len(self.missing),
            'mixed': len(self.mixed),
            'partial': len(self.partial),
        }


def score_accuracy(cags: Iterable[CAG], ground_truth: GroundTruth) -> AccuracyReport:
    """A request is correct when one complete CAG covers exactly its activities."""
    correct: Set[str] = set()
    touched: Set[str] = set()
    report = AccuracyReport(correct=0, total=len(ground_truth.requests))

    for cag in cags:
        refs = cag.activity_refs()
        owners = sorted({ground_truth.request_of(ref) for ref in refs})
        touched.update(rid for rid in owners if rid != NOISE_REQUEST_ID)
        if len(owners) != 1 or owners[0] == NOISE_REQUEST_ID:
            report.mixed.append((cag.id, owners))
            continue
        rid = owners[0]
        truth = ground_truth.requests[rid]
        if cag.is_complete and frozenset(refs) == truth.activity_set and rid not in correct:
            correct.add(rid)
        else:
            report.partial.append((cag.id, rid, len(refs), len(truth.activities)))

    report.correct = len(correct)
    report.missing = sorted(rid for rid in ground_truth.requests if rid not in touched)
    logger.info("path accuracy %d/%d", report.correct, report.total)
    return report
