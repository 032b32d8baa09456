"""Exception taxonomy shared by every flocklearn module."""


class FlockError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(FlockError):
    """Array dimensions do not satisfy an operation's contract."""


class ContractError(FlockError):
    """A precondition of an operation was violated (empty input, bad range, ...)."""


class ValidationError(FlockError):
    """Input data is structurally valid but semantically inconsistent."""


class ParseError(FlockError):
    """A file or stream could not be parsed; message carries the location."""


class ConfigError(FlockError):
    """Invalid or inconsistent run configuration."""


class CheckpointError(FlockError):
    """Base class for checkpoint load failures."""


class CheckpointFormatError(CheckpointError):
    """Checkpoint file is unreadable or not valid checkpoint JSON."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


class CheckpointSchemaError(CheckpointError):
    """Checkpoint parsed but its dimensions/fields are inconsistent."""
