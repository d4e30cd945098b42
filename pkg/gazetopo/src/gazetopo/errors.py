"""Exception hierarchy shared by every gazetopo module.

``InputError`` subclasses mean the caller handed us something unusable and map
to CLI exit code 1. ``InvariantError`` means our own computation broke a
contract and maps to exit code 2.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

__all__ = [
    "GazeTopoError",
    "InputError",
    "TrajectoryFormatError",
    "SplitError",
    "EmbeddingError",
    "FeatureTableError",
    "ModelFormatError",
    "ReportError",
    "OracleLimitError",
    "InvariantError",
    "StageError",
]


class GazeTopoError(Exception):
    """Base class for everything raised on purpose by this package."""


class InputError(GazeTopoError, ValueError):
    pass


class TrajectoryFormatError(InputError):
    """A trajectory or manifest file could not be read.

    ``path`` and ``line`` are kept as attributes so callers can point at the
    offending row without parsing the message.
    """

    def __init__(self, message: str, *, path: Union[str, Path, None] = None, line: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path if line is None else f"{self.path}:{line}"
            where = f"{where}: "
        super().__init__(f"{where}{message}")
        self._message = message

    def __reduce__(self):
        return (_rebuild_format_error, (self._message, self.path, self.line))


class SplitError(InputError):
    pass


class EmbeddingError(InputError):
    pass


class FeatureTableError(InputError):
    pass


class ModelFormatError(InputError):
    pass


class ReportError(InputError):
    pass


class OracleLimitError(InputError):
    pass


class InvariantError(GazeTopoError):
    pass


class StageError(GazeTopoError):
    """Wraps a failure with the pipeline stage and sample it happened in."""

    def __init__(self, stage: str, cause: BaseException, *, sample: Optional[str] = None):
        self.stage = stage
        self.sample = sample
        self.cause = cause
        target = f" [{sample}]" if sample else ""
        super().__init__(f"stage '{stage}'{target} failed: {cause}")

    def __reduce__(self):
        return (_rebuild_stage_error, (self.stage, self.cause, self.sample))

    @property
    def is_input_error(self) -> bool:
        return isinstance(self.cause, InputError)


def _rebuild_format_error(message: str, path: Optional[str], line: Optional[int]) -> TrajectoryFormatError:
    return TrajectoryFormatError(message, path=path, line=line)


def _rebuild_stage_error(stage: str, cause: BaseException, sample: Optional[str]) -> StageError:
    return StageError(stage, cause, sample=sample)
