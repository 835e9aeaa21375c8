"""Exception types and small input-checking helpers shared by all modules."""

import math

import numpy as np


class ParameterDomainError(ValueError):
    """A numeric argument lies outside the domain an operation accepts."""


class GeometryError(ValueError):
    """A scene is geometrically degenerate (e.g. source coincides with mic)."""


class ScheduleRangeError(IndexError):
    """A frame index falls outside a perturbation schedule."""


class DegenerateInputError(ValueError):
    """An input that must carry information does not (e.g. a zero vector)."""


class DataFormatError(ValueError):
    """A file on disk violates the expected format.

    ``offset`` is the byte offset at which the violation was detected, when
    that is meaningful.
    """

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        where = []
        if path is not None:
            where.append(str(path))
        if offset is not None:
            where.append(f"byte {offset}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)


def check_positive(name, value):
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ParameterDomainError(f"{name} must be > 0, got {value!r}")
    return value


def check_nonnegative(name, value):
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise ParameterDomainError(f"{name} must be >= 0, got {value!r}")
    return value


def check_in_range(name, value, lo, hi):
    value = float(value)
    if not (lo <= value <= hi):
        raise ParameterDomainError(f"{name} must lie in [{lo}, {hi}], got {value!r}")
    return value


def check_angles(name, angles, lo=-180.0, hi=180.0):
    arr = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < lo) or np.any(arr > hi):
        raise ParameterDomainError(f"{name} must lie in [{lo}, {hi}] degrees")
    return arr


def inclusive_grid(lo, hi, step, name="grid"):
    """Return ``lo, lo+step, ...`` up to and including ``hi``.

    Points are computed as ``lo + i*step`` so that long grids do not
    accumulate round-off from repeated addition.
    """
    lo = float(lo)
    hi = float(hi)
    step = float(step)
    if not math.isfinite(step) or step <= 0:
        raise ParameterDomainError(f"{name} step must be > 0, got {step!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ParameterDomainError(f"{name} is empty: [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n, dtype=float)
