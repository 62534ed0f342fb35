"""Writers for correlator output."""

from typing import Any, Dict, Iterable

from ..models.cag import CAG, cags_to_document
from ..utils.constants import CAG_FILE, FLUSH_REPORT_FILE
from .base_exporter import BaseExporter


class CagExporter(BaseExporter):
    """Writes the CAG collection sorted by root activity."""

    def __init__(self, cags: Iterable[CAG]):
        self.cags = list(cags)

    def get_output_filename(self) -> str:
        return CAG_FILE

    def generate(self) -> Dict[str, Any]:
        return cags_to_document(self.cags)


class FlushReportExporter(BaseExporter):

    def __init__(self, report: Dict[str, Any]):
        self.report = report

    def get_output_filename(self) -> str:
        return FLUSH_REPORT_FILE

    def generate(self) -> Dict[str, Any]:
        return self.report
