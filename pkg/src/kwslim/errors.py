"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: contract and config problems exit 1,
data/file problems exit 2.
"""


class KwslimError(Exception):
    """Base class for all engine errors."""


class ContractError(KwslimError):
    """An operation was called with arguments violating its precondition."""


class ConfigError(KwslimError):
    """A configuration value is out of its legal range."""


class DataError(KwslimError):
    """A file or dataset is missing, malformed, or corrupt."""
