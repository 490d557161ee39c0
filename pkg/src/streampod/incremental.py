"""Incremental core SVD of a growing snapshot matrix under weighted inner products.

Two variants are maintained:

* ``TWO_WEIGHT`` tracks the core SVD of ``U Delta : R^s_Delta -> R^m_M``.
  Right vectors satisfy ``W^T Delta W = I``.
* ``ONE_WEIGHT`` tracks the core SVD of ``U Delta^{1/2} : R^s -> R^m_M``.
  Right vectors satisfy ``W^T W = I`` and equal ``Delta^{1/2}`` times the
  two-weight right vectors.

Both variants share one update kernel fed with the pre-scaled column
``delta^{1/2} c``; they differ only in the block appended to ``W``. This is
what makes their left vectors and singular values agree bit for bit.
"""

import enum
import logging
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import DimensionMismatchError, VariantMismatchError, ZeroDataError
from .linalg import modified_gs_weighted, weighted_norm
from .validation import check_positive, check_vector

logger = logging.getLogger(__name__)

__all__ = [
    "Variant",
    "Branch",
    "IncrementalConfig",
    "SvdState",
    "UpdateReport",
    "initialize",
    "build_q",
    "update",
    "update_two_weight",
    "update_one_weight",
    "needs_reorthogonalization",
    "truncate_small_singular_values",
    "run_stream",
]


class Variant(str, enum.Enum):
    TWO_WEIGHT = "two-weight"
    ONE_WEIGHT = "one-weight"


class Branch(str, enum.Enum):
    RANK_INCREASE = "RankIncrease"
    TRUNCATION_I = "TruncationI"
    RANK_CAP = "RankCap"


@dataclass(frozen=True)
class IncrementalConfig:
    """Tolerances for the incremental update.

    Parameters
    ----------
    tol : float
        Linear-dependence tolerance. A new column whose scaled residual
        ``delta^{1/2} ||c - V V^* c||_M`` is below ``tol`` does not grow the
        rank. Also sets the reorthogonalization trigger. ``tol = 0`` forces
        rank growth and is only meaningful for full-rank data: on rank-deficient
        data it admits round-off directions, and once ``k`` reaches ``m`` the
        reorthogonalization may stop with :class:`RankDeficiencyError`.
    tol_sv : float
        Singular values ``<= tol_sv`` are dropped after each update.
    track_right_vectors : bool
        If False, ``W`` is never formed (left vectors and values only).
    reproject : bool
        Project the residual ``c - V d`` against ``V`` a second time before
        measuring it. Identical in exact arithmetic; in floating point it
        keeps the new direction M-orthogonal to ``V`` when the residual is
        small relative to ``c``, which the first/last-column probe alone
        does not detect. Set False for the single-pass update.
    """

    tol: float = 1e-10
    tol_sv: float = 0.0
    track_right_vectors: bool = True
    reproject: bool = True

    def __post_init__(self):
        # tol = 0 is allowed: it forces the exact rank-growth path.
        check_positive(self.tol, "tol", strict=False)
        check_positive(self.tol_sv, "tol_sv", strict=False)


@dataclass(frozen=True)
class UpdateReport:
    branch: Branch
    reorthogonalized: bool
    truncated_count: int


@dataclass(frozen=True)
class SvdState:
    """Current truncated core SVD ``(V, S, W)`` and the step lengths seen so far."""

    V: np.ndarray
    S: np.ndarray
    W: np.ndarray | None
    delta_log: np.ndarray
    variant: Variant

    @property
    def m(self):
        return self.V.shape[0]

    @property
    def k(self):
        return self.S.shape[0]

    @property
    def ell(self):
        return self.delta_log.shape[0]

    @property
    def tracks_right_vectors(self):
        return self.W is not None

    def reconstruct_data(self):
        """Return the data matrix ``U`` implied by the current factors.

        Two-weight: ``V S W^T``; one-weight: ``V S W~^T Delta^{-1/2}``.
        """
        if self.W is None:
            raise ValueError("right vectors are not tracked")
        A = (self.V * self.S) @ self.W.T
        if self.variant is Variant.ONE_WEIGHT:
            A = A / np.sqrt(self.delta_log)
        return A


def _as_variant(variant):
    return variant if isinstance(variant, Variant) else Variant(variant)


def initialize(c, delta, M, cfg=None, variant=Variant.TWO_WEIGHT):
    """Start an SVD from the first (nonzero) snapshot column.

    The one-column operator ``c delta`` (two-weight) has singular value
    ``delta^{1/2} ||c||_M``, left vector ``c / ||c||_M`` and right vector
    ``delta^{-1/2}``; the one-weight right vector is ``1``.
    """
    cfg = cfg or IncrementalConfig()
    variant = _as_variant(variant)
    c = check_vector(c, "c", M.shape[0])
    delta = check_positive(delta, "delta")
    nrm = weighted_norm(c, M)
    if nrm == 0.0:
        raise ZeroDataError("cannot initialize from zero data")
    alpha = np.sqrt(delta)
    V = (c / nrm)[:, None]
    S = np.array([alpha * nrm])
    W = None
    if cfg.track_right_vectors:
        W = np.array([[1.0 / alpha if variant is Variant.TWO_WEIGHT else 1.0]])
    return SvdState(V=V, S=S, W=W, delta_log=np.array([delta]), variant=variant)


def build_q(S, d, p, alpha, truncated=False):
    """Assemble the small matrix whose SVD drives the update.

    Returns ``[[diag(S), alpha d], [0, alpha p]]`` or, if ``truncated``,
    only its first ``k`` rows.
    """
    S = np.asarray(S, dtype=float)
    d = np.asarray(d, dtype=float)
    k = S.shape[0]
    if d.shape != (k,):
        raise DimensionMismatchError(f"d has shape {d.shape}, expected ({k},)")
    Q = np.zeros((k + 1, k + 1))
    Q[:k, :k] = np.diag(S)
    Q[:k, k] = alpha * d
    Q[k, k] = alpha * p
    return Q[:k] if truncated else Q


def _svd_fixed_sign(Q):
    """Thin SVD with the largest-magnitude entry of each left vector made positive."""
    VQ, SQ, WQt = np.linalg.svd(Q, full_matrices=False)
    WQ = WQt.T
    rows = np.argmax(np.abs(VQ), axis=0)
    signs = np.where(VQ[rows, np.arange(VQ.shape[1])] < 0, -1.0, 1.0)
    return VQ * signs, SQ, WQ * signs


def needs_reorthogonalization(V, M, tol):
    """Orthogonality probe ``|v_end^T M v_1| > min(tol, tol * m)``.

    Only the first and last columns are compared. With a single column the
    probe would compare a vector with itself, so it returns False.
    """
    V = np.asarray(V)
    if V.shape[1] < 2:
        return False
    m = V.shape[0]
    return bool(abs(V[:, -1] @ (M @ V[:, 0])) > min(tol, tol * m))


def truncate_small_singular_values(state, tol_sv):
    """Drop trailing triplets with singular value ``<= tol_sv``; at least one is kept."""
    r = int(np.count_nonzero(state.S > tol_sv))
    r = max(r, 1)
    if r == state.k:
        return state
    return replace(
        state,
        V=state.V[:, :r],
        S=state.S[:r],
        W=None if state.W is None else state.W[:, :r],
    )


def _update_kernel(state, c_scaled, w_block, delta, M, cfg):
    V, S, W = state.V, state.S, state.W
    k, m = state.k, state.m

    d = V.T @ (M @ c_scaled)
    h = c_scaled - V @ d
    if cfg.reproject:
        d2 = V.T @ (M @ h)
        h -= V @ d2
        d += d2
    p = np.sqrt(np.abs(h @ (M @ h)))

    # p == 0 must not grow the rank even with tol == 0
    dependent = p < cfg.tol or p == 0.0
    Q = build_q(S, d, p, 1.0, truncated=dependent)
    VQ, SQ, WQ = _svd_fixed_sign(Q)

    if dependent or k >= m:
        branch = Branch.TRUNCATION_I if dependent else Branch.RANK_CAP
        V_new = V @ VQ[:k, :k]
        S_new = SQ[:k]
        WQ = WQ[:, :k]
    else:
        branch = Branch.RANK_INCREASE
        j = h / p
        V_new = np.column_stack([V, j]) @ VQ
        S_new = SQ

    W_new = None
    if W is not None:
        # blkdiag(W, w_block) @ WQ without forming the block matrix
        W_new = np.vstack([W @ WQ[:k], w_block * WQ[k:k + 1]])

    reorth = needs_reorthogonalization(V_new, M, cfg.tol)
    if reorth:
        V_new = modified_gs_weighted(V_new, M)

    new = SvdState(
        V=V_new,
        S=S_new,
        W=W_new,
        delta_log=np.append(state.delta_log, delta),
        variant=state.variant,
    )
    trimmed = truncate_small_singular_values(new, cfg.tol_sv)
    report = UpdateReport(branch=branch, reorthogonalized=reorth,
                          truncated_count=new.k - trimmed.k)
    logger.debug("update ell=%d branch=%s k=%d p=%.3e reorth=%s",
                 trimmed.ell, branch.value, trimmed.k, p, reorth)
    return trimmed, report


def _check_update_args(state, c, delta, M, variant):
    if state.variant is not variant:
        raise VariantMismatchError(
            f"state holds a {state.variant.value} SVD, cannot apply a {variant.value} update"
        )
    if M.shape[0] != state.m:
        raise DimensionMismatchError(f"mass matrix has size {M.shape[0]}, state has m={state.m}")
    c = check_vector(c, "c", state.m)
    delta = check_positive(delta, "delta")
    return c, delta


def update_two_weight(state, c, delta, M, cfg=None):
    """Add snapshot ``c`` held over a step of length ``delta`` to a two-weight SVD.

    Returns the new state and an :class:`UpdateReport`. The kernel works on
    ``alpha c`` with ``alpha = delta^{1/2}``, so that ``alpha d`` and
    ``alpha p`` are computed directly as ``V^T M (alpha c)`` and
    ``||alpha c - V V^T M (alpha c)||_M``; the appended right-vector block
    is ``delta^{-1/2}``.
    """
    cfg = cfg or IncrementalConfig()
    c, delta = _check_update_args(state, c, delta, M, Variant.TWO_WEIGHT)
    alpha = np.sqrt(delta)
    return _update_kernel(state, alpha * c, 1.0 / alpha, delta, M, cfg)


def update_one_weight(state, c, delta, M, cfg=None):
    """Add snapshot ``c`` to a one-weight SVD of ``U Delta^{1/2}``.

    The column enters as ``c~ = delta^{1/2} c`` with unit temporal weight;
    ``delta`` is still logged for post-processing.
    """
    cfg = cfg or IncrementalConfig()
    c, delta = _check_update_args(state, c, delta, M, Variant.ONE_WEIGHT)
    return _update_kernel(state, np.sqrt(delta) * c, 1.0, delta, M, cfg)


def update(state, c, delta, M, cfg=None):
    """Dispatch to the update matching ``state.variant``."""
    if state.variant is Variant.TWO_WEIGHT:
        return update_two_weight(state, c, delta, M, cfg)
    return update_one_weight(state, c, delta, M, cfg)


def run_stream(records, M, cfg=None, variant=Variant.ONE_WEIGHT):
    """Feed ``(column, delta)`` pairs through initialization and updates.

    ``records`` may yield tuples or objects with ``column`` and ``delta``
    attributes. Returns the final state and per-branch update counts (the
    initializing column is not counted).
    """
    cfg = cfg or IncrementalConfig()
    variant = _as_variant(variant)
    counts = {b.value: 0 for b in Branch}
    state = None
    for rec in records:
        c, delta = (rec.column, rec.delta) if hasattr(rec, "column") else rec
        if state is None:
            state = initialize(c, delta, M, cfg, variant)
            continue
        state, report = update(state, c, delta, M, cfg)
        counts[report.branch.value] += 1
    if state is None:
        raise ZeroDataError("cannot initialize from zero data: the stream is empty")
    return state, counts
