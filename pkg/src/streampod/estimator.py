"""scikit-learn style estimators for streaming and batch weighted POD.

Rows of ``X`` are snapshots (coefficient vectors against the spatial
basis), so ``X`` is the transpose of the snapshot matrix ``U``.
``sample_weight`` carries the time-step lengths ``delta_j`` over which each
snapshot is held; omitted weights mean unit steps.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .exceptions import DimensionMismatchError
from .incremental import Branch, IncrementalConfig, Variant, initialize, update
from .linalg import TimeGrid
from .oracle import batch_core_svd_one_weight, batch_core_svd_two_weight
from .pod import modes_from_svd, temporal_functions
from .validation import check_mass_matrix

__all__ = ["IncrementalPOD", "BatchPOD"]


def _steps(sample_weight, n):
    if sample_weight is None:
        return np.ones(n)
    steps = np.asarray(sample_weight, dtype=float).ravel()
    if steps.shape[0] != n:
        raise DimensionMismatchError(f"sample_weight has {steps.shape[0]} entries, X has {n} rows")
    if np.any(~np.isfinite(steps)) or np.any(steps <= 0):
        raise ValueError("sample_weight (time steps) must be positive and finite")
    return steps


def _mass_or_identity(mass, m):
    if mass is None:
        return np.eye(m)
    M = check_mass_matrix(mass)
    if M.shape[0] != m:
        raise DimensionMismatchError(f"mass matrix is {M.shape[0]}x{M.shape[0]}, X has {m} features")
    return M


class _PODTransformMixin:
    """Projection onto and lifting from the fitted M-orthonormal modes."""

    @property
    def components_(self):
        check_is_fitted(self, "modes_")
        return self.modes_.T

    @property
    def n_components_(self):
        check_is_fitted(self, "modes_")
        return self.modes_.shape[1]

    def transform(self, X):
        """Modal coefficients ``X M V`` of each snapshot row."""
        check_is_fitted(self, "modes_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}"
            )
        return (self.mass_ @ X.T).T @ self.modes_

    def inverse_transform(self, Z):
        check_is_fitted(self, "modes_")
        Z = check_array(Z, dtype=float)
        return Z @ self.modes_.T


class IncrementalPOD(_PODTransformMixin, TransformerMixin, BaseEstimator):
    """Streaming POD via incremental weighted SVD.

    Parameters
    ----------
    mass : array-like or sparse matrix of shape (n_features, n_features), default=None
        Symmetric positive definite mass matrix; identity if None.
    variant : {"one-weight", "two-weight"}, default="one-weight"
    tol : float, default=1e-10
    tol_sv : float, default=0.0
    track_right_vectors : bool, default=True
    reproject : bool, default=True

    Attributes
    ----------
    state_ : SvdState
    singular_values_ : ndarray of shape (n_components_,)
    modes_ : ndarray of shape (n_features_in_, n_components_)
    branch_counts_ : dict
    """

    def __init__(self, mass=None, variant="one-weight", tol=1e-10, tol_sv=0.0,
                 track_right_vectors=True, reproject=True):
        self.mass = mass
        self.variant = variant
        self.tol = tol
        self.tol_sv = tol_sv
        self.track_right_vectors = track_right_vectors
        self.reproject = reproject

    def _config(self):
        return IncrementalConfig(tol=self.tol, tol_sv=self.tol_sv,
                                 track_right_vectors=self.track_right_vectors,
                                 reproject=self.reproject)

    def fit(self, X, y=None, sample_weight=None):
        for attr in ("state_", "modes_", "mass_", "n_features_in_"):
            self.__dict__.pop(attr, None)
        return self.partial_fit(X, y, sample_weight=sample_weight)

    def partial_fit(self, X, y=None, sample_weight=None):
        """Append the rows of ``X`` as new snapshots, in order."""
        X = check_array(X, dtype=float)
        steps = _steps(sample_weight, X.shape[0])
        first = not hasattr(self, "state_")
        if first:
            self.n_features_in_ = X.shape[1]
            self.mass_ = _mass_or_identity(self.mass, X.shape[1])
            self.branch_counts_ = {b.value: 0 for b in Branch}
            Variant(self.variant)
        elif X.shape[1] != self.n_features_in_:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}"
            )
        cfg = self._config()
        state = getattr(self, "state_", None)
        for x, delta in zip(X, steps):
            if state is None:
                state = initialize(x, delta, self.mass_, cfg, self.variant)
                continue
            state, report = update(state, x, delta, self.mass_, cfg)
            self.branch_counts_[report.branch.value] += 1
        self.state_ = state
        self.singular_values_ = state.S
        self.modes_ = state.V
        return self

    def pod_basis(self):
        check_is_fitted(self, "state_")
        return modes_from_svd(self.state_, self.mass_)

    def temporal_functions(self, grid=None):
        check_is_fitted(self, "state_")
        return temporal_functions(self.state_, grid)


class BatchPOD(_PODTransformMixin, TransformerMixin, BaseEstimator):
    """Exact dense weighted POD of all snapshots at once."""

    def __init__(self, mass=None, variant="one-weight"):
        self.mass = mass
        self.variant = variant

    def fit(self, X, y=None, sample_weight=None):
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        self.mass_ = _mass_or_identity(self.mass, X.shape[1])
        grid = TimeGrid.from_steps(_steps(sample_weight, X.shape[0]))
        if Variant(self.variant) is Variant.TWO_WEIGHT:
            self.svd_ = batch_core_svd_two_weight(X.T, self.mass_, grid)
        else:
            self.svd_ = batch_core_svd_one_weight(X.T, self.mass_, grid)
        self.grid_ = grid
        self.singular_values_ = self.svd_.S
        self.modes_ = self.svd_.V
        return self

    def pod_basis(self):
        check_is_fitted(self, "svd_")
        return modes_from_svd(self.svd_, self.mass_)

    def temporal_functions(self):
        check_is_fitted(self, "svd_")
        return temporal_functions(self.svd_, self.grid_)
