"""POD quantities from a weighted core SVD.

Data are piecewise constant in time: ``u(t) = u_j`` on ``(t_j, t_{j+1})``
where ``u_j`` is column ``j`` of the coefficient matrix ``U``. POD modes are
the M-orthonormal left singular vectors; the temporal POD functions are
piecewise constant too and are stored as coefficient vectors over the grid.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BreakpointError,
    DimensionMismatchError,
    IntegrityError,
    RightVectorsNotTrackedError,
)
from .incremental import Variant
from .linalg import TimeGrid
from .validation import check_matrix

__all__ = [
    "ChiConvention",
    "PodBasis",
    "TemporalCoefficients",
    "SnapshotData",
    "modes_from_svd",
    "temporal_functions",
    "reconstruct",
    "pod_error_tail",
    "pod_error_direct",
    "riemann_reduction",
]

MODES_ORTH_TOL = 1e-6


class ChiConvention(str, enum.Enum):
    """Basis used for temporal coefficients.

    ``PLAIN``: indicator functions ``chi_j`` of ``(t_j, t_{j+1})``.
    ``WEIGHTED``: ``delta_j^{-1/2} chi_j``, orthonormal in ``L^2``.
    """

    PLAIN = "PlainChi"
    WEIGHTED = "WeightedChi"


@dataclass(frozen=True)
class PodBasis:
    sigma: np.ndarray
    modes: np.ndarray
    mass: object

    @property
    def k(self):
        return self.sigma.shape[0]


@dataclass(frozen=True)
class TemporalCoefficients:
    grid: TimeGrid
    coeffs: np.ndarray
    convention: ChiConvention

    def plain(self):
        """Coefficients against the plain indicators (``w_i``)."""
        if self.convention is ChiConvention.PLAIN:
            return self.coeffs
        return self.coeffs / np.sqrt(self.grid.deltas)[:, None]

    def weighted(self):
        """Coefficients against the weighted indicators (``w~_i``)."""
        if self.convention is ChiConvention.WEIGHTED:
            return self.coeffs
        return self.coeffs * np.sqrt(self.grid.deltas)[:, None]

    def evaluate(self, t):
        """Values ``f_i(t)`` of all temporal functions at ``t``."""
        j = self.grid.interval_of(t)
        if j is None:
            raise BreakpointError(
                f"t={t!r} is outside (0, T) or on a grid point; "
                "piecewise-constant functions are undefined at breakpoints"
            )
        row = self.coeffs[j]
        if self.convention is ChiConvention.WEIGHTED:
            row = row / np.sqrt(self.grid.deltas[j])
        return row


@dataclass(frozen=True)
class SnapshotData:
    U: np.ndarray
    grid: TimeGrid
    mass: object

    def __post_init__(self):
        check_matrix(self.U, "U", rows=self.mass.shape[0], cols=self.grid.n_steps)


def modes_from_svd(state, M):
    """Wrap the left singular vectors of ``state`` as a :class:`PodBasis`.

    Works for incremental states and oracle outputs alike (anything with
    ``V`` and ``S``). Raises :class:`IntegrityError` if the modes are not
    M-orthonormal to 1e-6.
    """
    V, S = state.V, state.S
    if V.shape[0] != M.shape[0]:
        raise DimensionMismatchError(f"modes have {V.shape[0]} rows, mass matrix is {M.shape[0]}")
    defect = np.abs(V.T @ (M @ V) - np.eye(V.shape[1])).max() if V.size else 0.0
    if defect > MODES_ORTH_TOL:
        raise IntegrityError(f"POD modes lost M-orthonormality (defect {defect:.3e})")
    return PodBasis(sigma=S, modes=V, mass=M)


def temporal_functions(state, grid=None):
    """Temporal POD coefficients of ``state``.

    Two-weight states give plain-indicator coefficients, one-weight states
    weighted-indicator coefficients; both describe the same functions. The
    grid defaults to one starting at 0 with the logged step lengths.
    """
    if getattr(state, "W", None) is None:
        raise RightVectorsNotTrackedError("right vectors not tracked")
    variant = getattr(state, "variant", None)
    if variant is None:
        # oracle output: two-weight iff the right space carries a grid
        if state.right_weight is None:
            if grid is None:
                raise ValueError("a grid is required for one-weight oracle output")
            return TemporalCoefficients(grid, state.W, ChiConvention.WEIGHTED)
        return TemporalCoefficients(state.right_weight, state.W, ChiConvention.PLAIN)
    if grid is None:
        grid = TimeGrid.from_steps(state.delta_log)
    elif grid.n_steps != state.ell:
        raise DimensionMismatchError(f"grid has {grid.n_steps} steps, state has seen {state.ell}")
    conv = ChiConvention.PLAIN if variant is Variant.TWO_WEIGHT else ChiConvention.WEIGHTED
    return TemporalCoefficients(grid, state.W, conv)


def reconstruct(basis, temps, t, r):
    """Coefficients of the rank-``r`` POD approximation ``sum_i sigma_i f_i(t) v_i``."""
    if not 1 <= r <= basis.k:
        raise ValueError(f"r must satisfy 1 <= r <= {basis.k}, got {r}")
    f = temps.evaluate(t)[:r]
    return basis.modes[:, :r] @ (basis.sigma[:r] * f)


def pod_error_tail(sigma, r):
    """Minimal POD error ``sum_{i > r} sigma_i^2``."""
    sigma = np.asarray(sigma, dtype=float)
    if r < 0:
        raise ValueError("r must be nonnegative")
    return float(np.sum(sigma[r:] ** 2))


def pod_error_direct(data, basis, r):
    """Exact POD error ``sum_j delta_j ||u_j - P_r u_j||_M^2`` of the first ``r`` modes.

    ``P_r`` is the M-orthogonal projection onto the first ``r`` modes.
    """
    if data.U.shape[0] != basis.modes.shape[0]:
        raise DimensionMismatchError("data and basis have different spatial dimensions")
    if r < 0 or r > basis.k:
        raise ValueError(f"r must satisfy 0 <= r <= {basis.k}, got {r}")
    M = data.mass
    Vr = basis.modes[:, :r]
    E = data.U - Vr @ (Vr.T @ (M @ data.U))
    col_err = np.abs(np.einsum("ij,ij->j", E, M @ E))
    return float(col_err @ data.grid.deltas)


def riemann_reduction(samples):
    """Return ``U Delta^{1/2}``, the matrix of the discrete (Riemann-sum) POD problem."""
    return samples.U * np.sqrt(samples.grid.deltas)
