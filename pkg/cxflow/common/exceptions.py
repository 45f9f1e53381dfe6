from typing import Optional


class CxflowError(Exception):
    """
    Base class for errors raised by cxflow.
    """

    pass


class ConfigError(CxflowError):
    """
    Represents an invalid scenario or learning config.
    error.key holds the dotted key at fault and error.line the 1-based line it was read from, when known.
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message, key, line)
        self._message = message
        self._key = key
        self._line = line

    @property
    def message(self) -> str:
        return self._message

    @property
    def key(self) -> Optional[str]:
        return self._key

    @property
    def line(self) -> Optional[int]:
        return self._line

    def __str__(self) -> str:
        where = ""
        if self._key is not None:
            where = f"{self._key}"
            if self._line is not None:
                where += f" (line {self._line})"
            where += ": "
        return f"{where}{self._message}"


class GeometryError(CxflowError):
    """
    Thrown when an intersection cannot be built from its spec.
    """

    pass


class ObservationError(CxflowError):
    """
    Thrown when an observation is requested for a vehicle that is not deciding, e.g. one outside the control zone.
    """

    pass


class EventError(CxflowError):
    """
    Thrown when a scenario event cannot be applied to the current run.
    """

    pass


class CheckpointError(CxflowError):
    """
    Thrown when a checkpoint file is malformed or does not match the intersection it is loaded for.
    """

    pass


class RunLogError(CxflowError):
    """
    Thrown when a run log is malformed or too short for the requested computation.
    """

    pass
