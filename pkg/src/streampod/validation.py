"""Input validation helpers shared by the numerical modules and estimators."""

import numbers

import numpy as np
import scipy.sparse as sp
from sklearn.utils import check_array

from .exceptions import DimensionMismatchError

SYMMETRY_TOL = 1e-12


def check_vector(x, name="x", size=None):
    """Return ``x`` as a finite 1-D float array, optionally of length ``size``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and 1 in x.shape:
        x = x.ravel()
    if x.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or infinity")
    if size is not None and x.shape[0] != size:
        raise DimensionMismatchError(f"{name} has length {x.shape[0]}, expected {size}")
    return x


def check_matrix(A, name="A", rows=None, cols=None):
    A = check_array(A, dtype=float, ensure_2d=True, ensure_min_samples=0,
                    ensure_min_features=0, input_name=name)
    if rows is not None and A.shape[0] != rows:
        raise DimensionMismatchError(f"{name} has {A.shape[0]} rows, expected {rows}")
    if cols is not None and A.shape[1] != cols:
        raise DimensionMismatchError(f"{name} has {A.shape[1]} columns, expected {cols}")
    return A


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return float(value)


def check_mass_matrix(M, *, spd=True):
    """Validate a mass matrix and return it as a float ndarray or CSR matrix.

    Symmetry is checked to ``SYMMETRY_TOL`` relative to the largest entry.
    With ``spd=True`` a Cholesky probe rejects indefinite input.
    """
    if sp.issparse(M):
        M = sp.csr_matrix(M, dtype=float)
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatchError(f"mass matrix must be square, got {M.shape}")
        scale = abs(M).max() if M.nnz else 0.0
        asym = abs(M - M.T).max() if M.nnz else 0.0
    else:
        M = check_array(M, dtype=float, input_name="M")
        if M.shape[0] != M.shape[1]:
            raise DimensionMismatchError(f"mass matrix must be square, got {M.shape}")
        scale = np.abs(M).max() if M.size else 0.0
        asym = np.abs(M - M.T).max() if M.size else 0.0
    if asym > SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError(f"mass matrix is not symmetric (max asymmetry {asym:.3e})")
    if spd:
        from .linalg import cholesky_spd

        cholesky_spd(M)
    return M


def dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


__all__ = [
    "check_vector",
    "check_matrix",
    "check_positive",
    "check_mass_matrix",
    "dense",
]
