"""Exception hierarchy shared by every module of the package."""


class StreamSeanetError(Exception):
    """Base class for all package errors."""


class ShapeError(StreamSeanetError, ValueError):
    """Array or tensor dimensions do not agree."""


class ChunkSizeError(ShapeError):
    """A streaming chunk is not a positive multiple of the base chunk."""


class ConfigError(StreamSeanetError, ValueError):
    """An invalid layer or graph configuration."""


class UnsupportedGraphError(ConfigError):
    """The graph cannot be converted to a streaming executor."""


class DomainError(StreamSeanetError, ValueError):
    """An argument lies outside the domain of the operation."""


class FormatError(StreamSeanetError):
    """A file is malformed."""


class UnsupportedFormatError(FormatError):
    """A file is well formed but uses an unsupported encoding."""
