"""Streaming proper orthogonal decomposition under weighted inner products."""

from .estimator import BatchPOD, IncrementalPOD
from .exceptions import (
    BreakpointError,
    DataFormatError,
    DimensionMismatchError,
    GridError,
    IntegrityError,
    NotPositiveDefiniteError,
    RankDeficiencyError,
    RightVectorsNotTrackedError,
    StreamPODError,
    VariantMismatchError,
    ZeroDataError,
)
from .incremental import (
    Branch,
    IncrementalConfig,
    SvdState,
    UpdateReport,
    Variant,
    build_q,
    initialize,
    needs_reorthogonalization,
    run_stream,
    truncate_small_singular_values,
    update,
    update_one_weight,
    update_two_weight,
)
from .linalg import (
    TimeGrid,
    apply_weighted_adjoint,
    cholesky_spd,
    modified_gs_weighted,
    weighted_inner,
    weighted_norm,
)
from .oracle import (
    CoreSvd,
    VerifyReport,
    batch_core_svd_one_weight,
    batch_core_svd_two_weight,
    verify_core_svd,
)
from .pod import (
    ChiConvention,
    PodBasis,
    SnapshotData,
    TemporalCoefficients,
    modes_from_svd,
    pod_error_direct,
    pod_error_tail,
    reconstruct,
    riemann_reduction,
    temporal_functions,
)

__version__ = "0.1.0"
