"""
Exception base classes and utilities
^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^^
"""
import typing

import numpy as np


class BeeError(Exception):
    """
    Base class for exceptions to be raised by ``beetiny``
    """


class ConfigError(BeeError, ValueError):
    """
    Invalid configuration, layout or dimensions
    """


class UsageError(BeeError, RuntimeError):
    """
    An API was called out of order or with incompatible arguments
    """


class NonFiniteError(BeeError, FloatingPointError):
    """
    A loss or gradient contains ``nan`` or ``inf``

    :param message: Human readable summary
    :param diagnostics: Details about the offending values, e.g. tensor names and counts
    """
    def __init__(self, message: str, diagnostics: typing.Optional[typing.Dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}

    def __str__(self) -> str:
        if not self.diagnostics:
            return super().__str__()
        details = ", ".join(f"{key}={value}" for key, value in sorted(self.diagnostics.items()))
        return f"{super().__str__()} ({details})"


class DatasetError(BeeError, IOError):
    """
    A dataset or checkpoint file is corrupt or truncated

    :param message: Human readable summary
    :param offset: Byte offset at which reading failed
    """
    def __init__(self, message: str, offset: typing.Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


def non_finite_counts(arrays: typing.Mapping[str, np.ndarray]) -> typing.Dict[str, int]:
    """
    Count the non-finite entries per named array

    Arrays without any non-finite entry are omitted from the result.
    """
    counts = {}
    for name, array in arrays.items():
        bad = int(np.size(array) - np.count_nonzero(np.isfinite(array)))
        if bad:
            counts[name] = bad
    return counts


def ensure_finite(value: float, what: str, **context) -> float:
    """
    Raise :py:class:`NonFiniteError` if a scalar loss is ``nan`` or ``inf``
    """
    if not np.isfinite(value):
        raise NonFiniteError(f"Non-finite {what}: {value}", diagnostics=context)
    return float(value)
