"""Exception hierarchy shared by all peo modules."""


class PEOError(Exception):
    """Base class for every error raised by this package."""


class ContractError(PEOError):
    """Structural mismatch between values that must agree (shapes, encoder counts)."""


class DomainError(PEOError):
    """A value is outside the mathematical domain of an operation (NaN, zero norm)."""


class InputError(PEOError):
    """Bad user-supplied input: prompts, files, configuration."""
