"""Exact dense core SVD under weighted inner products.

The batch route reduces the weighted problem to a standard SVD through the
Cholesky factor of the mass matrix: with ``M = L L^T`` and
``B = L^T U Delta^{1/2}``, a standard SVD ``B = V_B S W_B^T`` gives the
one-weight factors ``V = L^{-T} V_B`` and ``W~ = W_B``, and the two-weight
right vectors ``W = Delta^{-1/2} W_B``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .linalg import TimeGrid, cholesky_spd
from .validation import check_matrix

__all__ = [
    "CoreSvd",
    "VerifyReport",
    "batch_core_svd_two_weight",
    "batch_core_svd_one_weight",
    "verify_core_svd",
]

RANK_CUT = 1e-12


@dataclass(frozen=True)
class CoreSvd:
    """Core SVD ``A = V diag(S) W^*``.

    ``right_weight`` is the :class:`TimeGrid` whose step matrix weights the
    right space, or ``None`` for the unweighted inner product.
    """

    V: np.ndarray
    S: np.ndarray
    W: np.ndarray
    left_weight: object = field(repr=False)
    right_weight: TimeGrid | None = None

    @property
    def k(self):
        return self.S.shape[0]


def _scaled_by_sqrt_steps(U, grid):
    if grid is None:
        return U
    if grid.n_steps != U.shape[1]:
        raise ValueError(f"grid has {grid.n_steps} steps but U has {U.shape[1]} columns")
    return U * np.sqrt(grid.deltas)


def _reduced_svd(A, M):
    """Core SVD of ``A : R^s -> R^m_M`` via the Cholesky reduction."""
    A = check_matrix(A, "U", rows=M.shape[0])
    L = cholesky_spd(M)
    B = L.T @ A
    VB, S, WBt = la.svd(B, full_matrices=False)
    keep = S > RANK_CUT * S[0] if S.size and S[0] > 0 else np.zeros(S.shape, dtype=bool)
    k = int(np.count_nonzero(keep))
    VB, S, WB = VB[:, :k], S[:k], WBt[:k].T
    rows = np.argmax(np.abs(VB), axis=0)
    signs = np.where(VB[rows, np.arange(k)] < 0, -1.0, 1.0)
    VB, WB = VB * signs, WB * signs
    V = la.solve_triangular(L.T, VB, lower=False)
    return V, S, WB


def batch_core_svd_one_weight(U, M, grid=None):
    """Core SVD of ``U Delta^{1/2} : R^s -> R^m_M``.

    With ``grid=None`` the step matrix is the identity and ``U`` is used
    as is.
    """
    U = check_matrix(U, "U", rows=M.shape[0])
    V, S, W = _reduced_svd(_scaled_by_sqrt_steps(U, grid), M)
    return CoreSvd(V=V, S=S, W=W, left_weight=M, right_weight=None)


def batch_core_svd_two_weight(U, M, grid):
    """Core SVD of ``U Delta : R^s_Delta -> R^m_M``."""
    U = check_matrix(U, "U", rows=M.shape[0])
    V, S, WB = _reduced_svd(_scaled_by_sqrt_steps(U, grid), M)
    W = WB / np.sqrt(grid.deltas)[:, None]
    return CoreSvd(V=V, S=S, W=W, left_weight=M, right_weight=grid)


@dataclass
class VerifyReport:
    """Residuals and defects of a candidate core SVD.

    Residuals are relative to the larger of their two sides; orthonormality defects are max
    absolute entries of ``V^T M V - I`` and ``W^T Delta W - I``.
    """

    forward_residual: float
    adjoint_residual: float
    orth_defect_V: float
    orth_defect_W: float
    ordering_violations: int
    tol_check: float

    @property
    def failures(self):
        out = [
            name
            for name in ("forward_residual", "adjoint_residual", "orth_defect_V", "orth_defect_W")
            if not getattr(self, name) <= self.tol_check
        ]
        if self.ordering_violations:
            out.append("ordering")
        return out

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        return {
            "forward_residual": self.forward_residual,
            "adjoint_residual": self.adjoint_residual,
            "orth_defect_V": self.orth_defect_V,
            "orth_defect_W": self.orth_defect_W,
            "ordering_violations": self.ordering_violations,
            "tol_check": self.tol_check,
            "passed": self.passed,
            "failures": self.failures,
        }


def _rel(diff, a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(diff) / scale) if scale > 0 else 0.0


def verify_core_svd(A, M, right_weight, cand, tol_check=1e-9):
    """Check ``A W = V S`` and ``A^* V = W S`` plus orthonormality and ordering.

    ``A`` is the operator matrix itself (``U Delta`` for a two-weight
    candidate, ``U Delta^{1/2}`` for a one-weight one); ``right_weight`` is
    a :class:`TimeGrid` or ``None``.
    """
    A = np.asarray(A, dtype=float)
    V, S, W = cand.V, cand.S, cand.W
    k = S.shape[0]
    if right_weight is None:
        deltas = np.ones(A.shape[1])
    else:
        deltas = right_weight.deltas
    MV = M @ V
    AW, VS = A @ W, V * S
    adj, WS = (A.T @ MV) / deltas[:, None], W * S
    fwd = _rel(AW - VS, AW, VS)
    adj_res = _rel(adj - WS, adj, WS)
    eye = np.eye(k)
    dV = np.abs(V.T @ MV - eye).max() if k else 0.0
    dW = np.abs(W.T @ (W * deltas[:, None]) - eye).max() if k else 0.0
    order = int(np.count_nonzero(np.diff(S) > 0) + np.count_nonzero(S <= 0))
    return VerifyReport(fwd, adj_res, dV, dW, order, tol_check)
