"""Weighted inner-product primitives.

Vectors are coefficient arrays against a fixed spatial basis; the spatial
inner product is ``(x, y)_M = y^T M x`` for a symmetric positive definite
mass matrix ``M`` (dense ndarray or scipy sparse). The temporal side is
weighted by the diagonal step matrix ``Delta`` of a :class:`TimeGrid`.
"""

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .exceptions import (
    DimensionMismatchError,
    GridError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
)
from .validation import check_matrix, check_vector

__all__ = [
    "TimeGrid",
    "weighted_inner",
    "weighted_norm",
    "apply_weighted_adjoint",
    "modified_gs_weighted",
    "cholesky_spd",
]

GS_RANK_TOL = 1e-14


class TimeGrid:
    """Strictly increasing time points ``t_1 < ... < t_{s+1}``.

    The grid induces ``s`` open intervals ``(t_j, t_{j+1})`` with step
    lengths ``delta_j = t_{j+1} - t_j``.
    """

    def __init__(self, points):
        points = check_vector(points, name="time points")
        if points.shape[0] < 2:
            raise GridError("a time grid needs at least two points")
        steps = np.diff(points)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0))
            raise GridError(
                f"time points must be strictly increasing (t[{bad}]={points[bad]!r}, "
                f"t[{bad + 1}]={points[bad + 1]!r})"
            )
        self._points = points
        self._points.setflags(write=False)
        self._deltas = steps
        self._deltas.setflags(write=False)

    @classmethod
    def from_steps(cls, deltas, start=0.0):
        deltas = check_vector(deltas, name="time steps")
        if np.any(deltas <= 0):
            raise GridError("time steps must be positive")
        return cls(np.concatenate([[start], start + np.cumsum(deltas)]))

    @classmethod
    def unit(cls, s):
        """Grid ``0, 1, ..., s`` whose step matrix is the identity."""
        return cls(np.arange(s + 1, dtype=float))

    @property
    def points(self):
        return self._points

    @property
    def deltas(self):
        return self._deltas

    @property
    def n_steps(self):
        return self._deltas.shape[0]

    @property
    def T(self):
        return self._points[-1]

    def interval_of(self, t):
        """Index ``j`` with ``t_j < t < t_{j+1}``, or ``None`` on a breakpoint / outside."""
        j = int(np.searchsorted(self._points, t, side="right")) - 1
        if j < 0 or j >= self.n_steps:
            return None
        if t == self._points[j] or t == self._points[j + 1]:
            return None
        return j

    def midpoints(self):
        return 0.5 * (self._points[:-1] + self._points[1:])

    def __len__(self):
        return self.n_steps

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self._points, other._points)

    def __repr__(self):
        return f"TimeGrid(s={self.n_steps}, T={self.T:g})"


def _deltas(grid):
    if isinstance(grid, TimeGrid):
        return grid.deltas
    return check_vector(grid, name="time steps")


def weighted_inner(x, y, M):
    """Return ``(x, y)_M = y^T M x``."""
    n = M.shape[0]
    x = check_vector(x, "x", n)
    y = check_vector(y, "y", n)
    return float(y @ (M @ x))


def weighted_norm(x, M):
    """Return ``sqrt(|x^T M x|)``.

    The absolute value guards against round-off making ``x^T M x`` slightly
    negative for tiny ``x``.
    """
    x = check_vector(x, "x", M.shape[0])
    return float(np.sqrt(np.abs(x @ (M @ x))))


def apply_weighted_adjoint(A, M, grid, y):
    """Apply the adjoint of ``A : R^s_Delta -> R^m_M``, i.e. ``Delta^{-1} A^T M y``."""
    m = M.shape[0]
    deltas = _deltas(grid)
    A = check_matrix(A, "A", rows=m, cols=deltas.shape[0])
    y = check_vector(y, "y", m)
    return (A.T @ (M @ y)) / deltas


def modified_gs_weighted(V, M):
    """M-orthonormalize the columns of ``V`` by modified Gram-Schmidt.

    Each column is swept twice against the already accepted columns before
    it is normalized, which keeps ``V^T M V`` at the round-off level even
    when the input has lost orthogonality.

    Raises
    ------
    RankDeficiencyError
        If a column's M-norm after projection falls below 1e-14.
    """
    V = check_matrix(V, "V", rows=M.shape[0])
    Q = V.copy()
    MQ = np.empty_like(Q)
    for j in range(Q.shape[1]):
        v = Q[:, j]
        for _ in range(2):
            for i in range(j):
                v -= (MQ[:, i] @ v) * Q[:, i]
        Mv = M @ v
        nrm = np.sqrt(np.abs(v @ Mv))
        if nrm < GS_RANK_TOL:
            raise RankDeficiencyError(
                f"column {j} is numerically dependent on the previous columns "
                f"(M-norm {nrm:.3e} after projection)"
            )
        Q[:, j] = v / nrm
        MQ[:, j] = Mv / nrm
    return Q


def cholesky_spd(M):
    """Lower-triangular ``L`` with ``M = L L^T``.

    Sparse input is densified; mass matrices handled here are desk scale.
    """
    A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}")
    try:
        return la.cholesky(A, lower=True, check_finite=True)
    except la.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite ({exc})") from None
