"""Record of one command run."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .. import __version__


@dataclass
class RunManifest:
    """What a command read, what it wrote and what it counted on the way."""
    command: str
    config_paths: Dict[str, str] = field(default_factory=dict)
    config: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    tool_version: str = __version__
    counters: Dict[str, Any] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        """Whether every activity read was correlated, discarded or orphaned."""
        c = self.counters
        if 'activities_read' not in c or 'correlated' not in c:
            return True
        discarded = c.get('filtered', 0) + c.get('noise_discarded', 0) + c.get('dangling_discarded', 0)
        return c['activities_read'] == c['correlated'] + discarded + c.get('orphaned', 0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'tool_version': self.tool_version,
            'seed': self.seed,
            'config_paths': self.config_paths,
            'config': self.config,
            'counters': self.counters,
            'counters_consistent': self.consistent,
            'outputs': sorted(self.outputs),
        }
