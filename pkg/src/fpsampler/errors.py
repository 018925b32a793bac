"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, NumericError -> 3,
OSError -> 4.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad ids, mismatched dimensions, bad key values."""


class ShapeError(ConfigError):
    """Array shape incompatible with the declared layout."""


class NumericError(RuntimeError):
    """A computation produced (or was fed) non-finite values."""


class InputError(NumericError):
    """Caller supplied non-finite or out-of-domain input data."""


class ContractError(RuntimeError):
    """API misuse: objects from different builds mixed, stale caches, etc."""
