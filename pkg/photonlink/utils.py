import functools
import inspect

import numpy as np


class PhotonLinkError(Exception):
    """Base class for every error raised by photonlink."""


class ParameterDomainError(PhotonLinkError, ValueError):
    """An argument lies outside the domain of the model or operation."""


class UnattainableScintillationError(ParameterDomainError):
    """
    A Gamma-Gamma scintillation index the Rytov parameterisation cannot reach.

    :param si: the requested scintillation index
    :param interval: the (low, high) Rytov variance interval that was searched
    :param si_max: the largest scintillation index on that interval
    """

    def __init__(self, si, interval, si_max):
        self.si = si
        self.interval = interval
        self.si_max = si_max
        super().__init__(
            f"scintillation index {si!r} is not attainable: searched Rytov "
            f"variance in [{interval[0]:.6g}, {interval[1]:.6g}], "
            f"maximum attainable S.I. is {si_max:.6g}")


class ConfigurationError(PhotonLinkError, ValueError):
    """Invalid run configuration. Config-file errors know their key and line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        if key is not None:
            where = f" (line {line})" if line is not None else ""
            message = f"{key}{where}: {message}"
        super().__init__(message)


def _check_arguments(predicate, requirement, names):
    def wrapper(func):
        signature = inspect.signature(func)

        @functools.wraps(func)
        def decorator(*args, **kwargs):
            bound = signature.bind(*args, **kwargs)
            for name in names:
                if name not in bound.arguments:
                    continue
                value = bound.arguments[name]
                if not np.all(predicate(np.asarray(value, dtype=float))):
                    raise ParameterDomainError(
                        f"{func.__name__}: {name} must be {requirement} (got {value!r})")
            return func(*args, **kwargs)
        return decorator
    return wrapper


def check_positive(*names):
    """Reject calls where any named argument is not strictly positive."""
    return _check_arguments(lambda v: v > 0, "positive", names)


def check_nonnegative(*names):
    """Reject calls where any named argument is negative."""
    return _check_arguments(lambda v: v >= 0, "non-negative", names)


def check_binary(*names):
    """Reject calls where any named argument is not a 0/1 bit."""
    return _check_arguments(lambda v: (v == 0) | (v == 1), "0 or 1", names)


def bits_to_tuple(bits):
    """Return bits as a tuple of python ints"""
    return tuple(int(b) for b in bits)
