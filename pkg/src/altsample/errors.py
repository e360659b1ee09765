"""Exception types shared across the package.

Each maps to a CLI exit code: ConfigError -> 2, DataError (and its
FormatError subclass) -> 3, NumericError -> 4.
"""


class ConfigError(ValueError):
    """Invalid parameters, shapes, or configuration files."""


class DataError(ValueError):
    """Dataset contents violate a requirement (missing class, bad counts)."""


class FormatError(DataError):
    """A file on disk does not follow its documented layout."""


class NumericError(ArithmeticError):
    """Non-finite loss or gradient encountered during training."""


class ContractViolation(RuntimeError):
    """An internal stage contract was broken (e.g. pseudo data in a supervised-only path)."""


class UnsupportedOperation(RuntimeError):
    """Operation needs information this object does not carry (e.g. hidden labels)."""
