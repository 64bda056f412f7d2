"""
Error Types
Exception hierarchy shared by every component of the toolkit
"""

from typing import Iterable, Optional


class ToggleBenchError(Exception):
    """Base class for all toolkit errors"""


class ConfigError(ToggleBenchError):
    """Invalid or incomplete run configuration"""


class ActionParseError(ToggleBenchError, ValueError):
    """Agent output that does not follow the dialect grammar"""

    def __init__(self, message: str, raw: str, offset: int = 0, dialect: Optional[str] = None):
        self.raw = raw
        self.offset = offset
        self.dialect = dialect
        super().__init__(f"{message} (offset {offset}): {raw[:200]!r}")


class UnsupportedActionError(ToggleBenchError, ValueError):
    """Action type that a dialect cannot express"""


class AnnotatorError(ToggleBenchError):
    """Annotator transport failure or repeatedly unparseable response"""


class CheckpointError(ToggleBenchError):
    """Checkpoint file cannot be trusted for resumption"""


class UnknownTaskError(ToggleBenchError, KeyError):
    """Dynamic task id that is not registered"""

    def __init__(self, task_id: str, registered: Iterable[str]):
        self.task_id = task_id
        self.registered = sorted(registered)
        super().__init__(f"Unknown task '{task_id}'. Registered tasks: {', '.join(self.registered)}")

    def __str__(self) -> str:
        return self.args[0]


class ProtocolError(ToggleBenchError):
    """Agent broke the episode protocol"""


class AgentSpawnError(ToggleBenchError):
    """Agent process or endpoint could not be started"""


class ExportError(ToggleBenchError):
    """Training example failed the export round-trip check"""

    def __init__(self, message: str, example_id: str):
        self.example_id = example_id
        super().__init__(f"{message} [example {example_id}]")


class MissingPredictionError(ToggleBenchError):
    """Samples without a prediction in a non-strict evaluation"""

    def __init__(self, missing_ids: Iterable[str]):
        self.missing_ids = sorted(missing_ids)
        preview = ', '.join(self.missing_ids[:10])
        more = f" (+{len(self.missing_ids) - 10} more)" if len(self.missing_ids) > 10 else ""
        super().__init__(f"{len(self.missing_ids)} samples have no prediction: {preview}{more}")
