"""Exception hierarchy shared by all modules."""


class XraycastError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(XraycastError, ValueError):
    """An argument violates a precondition (non-finite, wrong shape, ...)."""


class DegenerateInputError(XraycastError, ValueError):
    """Input is structurally valid but degenerate (e.g. all-zero radiograph)."""


class ParseError(XraycastError):
    """A file could not be decoded; message names byte offsets where known."""


class SchemaError(XraycastError):
    """A file decoded but its metadata violates the schema; names the key."""
