"""Writer for run manifests."""

from typing import Any, Dict

from ..models.manifest import RunManifest
from ..utils.constants import MANIFEST_FILE
from .base_exporter import BaseExporter


class ManifestExporter(BaseExporter):

    def __init__(self, manifest: RunManifest, filename: str = MANIFEST_FILE):
        self.manifest = manifest
        self.filename = filename

    def get_output_filename(self) -> str:
        return self.filename

    def generate(self) -> Dict[str, Any]:
        return self.manifest.to_dict()
