"""Exception types raised by the tracer."""


class TracerError(Exception):
    """Base class for every error the tracer raises on purpose."""


class ConfigError(TracerError):
    """A configuration document is missing fields or holds invalid values."""


class MalformedLine(TracerError):
    """A log line does not follow the activity record format."""

    def __init__(self, line: str, reason: str):
        super().__init__(f"{reason}: {line!r}")
        self.line = line
        self.reason = reason


class SplitError(TracerError):
    """A message cannot be split into the requested number of parts."""


class IncompletePath(TracerError):
    """Latency decomposition was asked for a path without BEGIN and END."""


class PatternMismatch(TracerError):
    """A pattern member is not isomorphic to the pattern's representative."""
