"""Base class for report and CAG writers."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Union

from ..utils.file_utils import write_json, write_text


class BaseExporter(ABC):
    """Abstract base class for files written into a run directory."""

    @abstractmethod
    def generate(self) -> Union[Dict[str, Any], str]:
        """Generate the file content as a dictionary, or as text for non-JSON files."""
        pass

    @abstractmethod
    def get_output_filename(self) -> str:
        """Get the output filename for this exporter."""
        pass

    def write_to_file(self, output_dir: Path) -> Path:
        """Generate content and write to file in output directory."""
        content = self.generate()
        output_path = output_dir / self.get_output_filename()
        if isinstance(content, str):
            write_text(content, output_path)
        else:
            write_json(content, output_path)
        return output_path
