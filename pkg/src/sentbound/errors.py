"""Exception types shared across the toolkit."""


class SentboundError(Exception):
    """Base class for all toolkit errors."""


class ContractError(SentboundError):
    """An operation was called with arguments that violate its contract."""


class ParseError(SentboundError):
    """A data file is malformed. Carries file and line context when known."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
            if line is not None:
                loc = f"{path}:{line}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line


class ModelFileError(SentboundError):
    """A model container is corrupt, truncated, or from an unknown version."""


class NumericError(SentboundError):
    """Training produced a non-finite quantity."""
