"""Input validation helpers.

scikit-learn's ``check_array`` refuses complex input, so vectors and families
are validated here instead.
"""
import numpy as np

from .errors import InvalidInputError, NumericalFailure


def check_vector(u, dim=None, name="u"):
    """Return ``u`` as a finite 1-D complex128 array, optionally of length ``dim``."""
    arr = np.asarray(u)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number):
        raise InvalidInputError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.complex128, copy=False)
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if arr.shape[0] == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def check_family(us, dim=None, name="us", allow_empty=False):
    """Return a family of vectors as a finite 2-D complex array, one vector per row."""
    if isinstance(us, np.ndarray):
        arr = us
    else:
        us = list(us)
        if not us:
            arr = np.zeros((0, dim or 0), dtype=np.complex128)
        else:
            arr = np.array([np.asarray(u) for u in us])
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be a sequence of equal-length vectors")
    if arr.shape[0] == 0 and not allow_empty:
        raise InvalidInputError(f"{name} is empty")
    if not np.issubdtype(arr.dtype, np.number):
        raise InvalidInputError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.complex128, copy=False)
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise InvalidInputError(f"{name} has vectors of length {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def ensure_finite(value, what):
    """Raise :class:`NumericalFailure` if an intermediate result is not finite."""
    if not np.all(np.isfinite(value)):
        raise NumericalFailure(f"non-finite intermediate in {what}")
    return value


def frozen(arr):
    """Mark an array read-only and return it."""
    arr.setflags(write=False)
    return arr
