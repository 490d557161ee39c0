import numpy as np
import pytest
from numpy.testing import assert_allclose

from streampod import (
    BreakpointError,
    ChiConvention,
    IncrementalConfig,
    IntegrityError,
    RightVectorsNotTrackedError,
    SnapshotData,
    SvdState,
    TimeGrid,
    Variant,
    batch_core_svd_one_weight,
    batch_core_svd_two_weight,
    initialize,
    modes_from_svd,
    pod_error_direct,
    pod_error_tail,
    reconstruct,
    riemann_reduction,
    run_stream,
    temporal_functions,
)

from conftest import random_instance

I2 = np.eye(2)


def _orthogonal_two_snapshot():
    cfg = IncrementalConfig(tol=1e-12)
    state, _ = run_stream([([1, 0], 1.0), ([0, 2], 1.0)], I2, cfg, "two-weight")
    return state


def test_modes_identity():
    st_ = SvdState(V=I2, S=np.array([2.0, 1.0]), W=I2, delta_log=np.ones(2),
                   variant=Variant.TWO_WEIGHT)
    basis = modes_from_svd(st_, I2)
    assert_allclose(basis.modes, I2)
    assert_allclose(basis.sigma, [2.0, 1.0])


def test_modes_rank_one():
    M = np.diag([1.0, 4.0])
    basis = modes_from_svd(initialize([3, 2], 9.0, M), M)
    assert_allclose(basis.sigma, [5.0 * 3.0])


def test_modes_random_orthonormal(rng):
    U, M, grid = random_instance(rng, 9, 12)
    state, _ = run_stream(zip(U.T, grid.deltas), M, IncrementalConfig(tol=1e-12))
    V = modes_from_svd(state, M).modes
    assert np.abs(V.T @ M @ V - np.eye(V.shape[1])).max() < 1e-8


def test_modes_integrity_error():
    V = np.array([[1.0, 1.0], [0.0, 1.0]])
    st_ = SvdState(V=V, S=np.array([2.0, 1.0]), W=I2, delta_log=np.ones(2),
                   variant=Variant.TWO_WEIGHT)
    with pytest.raises(IntegrityError):
        modes_from_svd(st_, I2)


@pytest.mark.parametrize("variant, coeff", [("two-weight", 0.5), ("one-weight", 1.0)])
def test_temporal_single_snapshot(variant, coeff):
    temps = temporal_functions(initialize([3, 4], 4.0, I2, variant=variant))
    assert_allclose(temps.coeffs, [[coeff]])
    # both conventions describe the same function f = 0.5 on (0, 4)
    assert_allclose(temps.evaluate(2.0), [0.5])
    assert_allclose(temps.plain(), [[0.5]])
    assert_allclose(temps.weighted(), [[1.0]])


def test_temporal_conventions():
    assert temporal_functions(initialize([1, 0], 1.0, I2, variant="two-weight")).convention \
        is ChiConvention.PLAIN
    assert temporal_functions(initialize([1, 0], 1.0, I2, variant="one-weight")).convention \
        is ChiConvention.WEIGHTED


def test_temporal_not_tracked():
    st_ = initialize([1, 0], 1.0, I2, IncrementalConfig(track_right_vectors=False))
    with pytest.raises(RightVectorsNotTrackedError, match="right vectors not tracked"):
        temporal_functions(st_)


def test_temporal_from_oracle(rng):
    U, M, grid = random_instance(rng, 5, 4)
    two = temporal_functions(batch_core_svd_two_weight(U, M, grid))
    one = temporal_functions(batch_core_svd_one_weight(U * np.sqrt(grid.deltas), M), grid)
    assert_allclose(one.plain(), two.plain(), atol=1e-12)


def test_reconstruct_orthogonal_example():
    state = _orthogonal_two_snapshot()
    out = reconstruct(modes_from_svd(state, I2), temporal_functions(state), 0.5, 2)
    assert_allclose(out, [1.0, 0.0], atol=1e-15)
    out = reconstruct(modes_from_svd(state, I2), temporal_functions(state), 1.5, 2)
    assert_allclose(out, [0.0, 2.0], atol=1e-15)


def test_reconstruct_breakpoints():
    state = _orthogonal_two_snapshot()
    basis, temps = modes_from_svd(state, I2), temporal_functions(state)
    for t in (0.0, 1.0, 2.0, 3.0, -1.0):
        with pytest.raises(BreakpointError, match="undefined at breakpoints"):
            reconstruct(basis, temps, t, 1)


def test_reconstruct_rank_bounds():
    state = _orthogonal_two_snapshot()
    basis, temps = modes_from_svd(state, I2), temporal_functions(state)
    with pytest.raises(ValueError):
        reconstruct(basis, temps, 0.5, 0)
    with pytest.raises(ValueError):
        reconstruct(basis, temps, 0.5, 3)


def test_reconstruct_rank_one_exact():
    u = np.array([1.0, -2.0, 0.5])
    M = np.diag([1.0, 2.0, 3.0])
    state, _ = run_stream([(u, 0.5), (3 * u, 2.0)], M, IncrementalConfig(tol=1e-10))
    basis, temps = modes_from_svd(state, M), temporal_functions(state)
    assert_allclose(reconstruct(basis, temps, 0.25, 1), u, atol=1e-14)
    assert_allclose(reconstruct(basis, temps, 1.0, 1), 3 * u, atol=1e-14)


@pytest.mark.parametrize("r, expected", [(1, 5.0), (3, 0.0), (0, 14.0)])
def test_error_tail(r, expected):
    assert pod_error_tail([3.0, 2.0, 1.0], r) == expected


def test_error_direct_full_rank_and_tail(rng):
    U, M, grid = random_instance(rng, 6, 8)
    data = SnapshotData(U, grid, M)
    state, _ = run_stream(zip(U.T, grid.deltas), M, IncrementalConfig(tol=0.0))
    basis = modes_from_svd(state, M)
    scale = np.linalg.norm(np.linalg.cholesky(M).T @ riemann_reduction(data)) ** 2
    assert pod_error_direct(data, basis, basis.k) <= 1e-10 * scale
    for r in range(basis.k + 1):
        tail = pod_error_tail(basis.sigma, r)
        assert abs(pod_error_direct(data, basis, r) - tail) <= 1e-8 * max(1.0, tail)


def test_error_direct_rank_one():
    u = np.array([1.0, 2.0])
    U = np.column_stack([u, -u, 2 * u])
    grid = TimeGrid.from_steps([1.0, 0.5, 2.0])
    state, _ = run_stream(zip(U.T, grid.deltas), I2, IncrementalConfig(tol=1e-10))
    assert pod_error_direct(SnapshotData(U, grid, I2), modes_from_svd(state, I2), 1) < 1e-28


def test_snapshot_data_shape_check():
    with pytest.raises(ValueError):
        SnapshotData(np.ones((2, 3)), TimeGrid.unit(2), I2)


def test_riemann_examples():
    U = np.arange(6.0).reshape(2, 3)
    assert_allclose(riemann_reduction(SnapshotData(U, TimeGrid.unit(3), I2)), U)
    out = riemann_reduction(SnapshotData(I2, TimeGrid.from_steps([4.0, 9.0]), I2))
    assert_allclose(out, np.diag([2.0, 3.0]))
