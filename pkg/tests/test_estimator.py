import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from streampod import BatchPOD, DimensionMismatchError, IncrementalPOD, TimeGrid
from streampod.io import generate_heat_fem_data

from conftest import random_instance


def test_incremental_matches_batch(rng):
    U, M, grid = random_instance(rng, 8, 12)
    inc = IncrementalPOD(mass=M, tol=1e-12).fit(U.T, sample_weight=grid.deltas)
    ref = BatchPOD(mass=M).fit(U.T, sample_weight=grid.deltas)
    assert_allclose(inc.singular_values_, ref.singular_values_, rtol=1e-10)
    assert inc.n_components_ == ref.n_components_ == 8


def test_partial_fit_equals_fit(rng):
    U, M, grid = random_instance(rng, 6, 10)
    full = IncrementalPOD(mass=M).fit(U.T, sample_weight=grid.deltas)
    part = IncrementalPOD(mass=M)
    for lo, hi in ((0, 3), (3, 4), (4, 10)):
        part.partial_fit(U.T[lo:hi], sample_weight=grid.deltas[lo:hi])
    assert_allclose(part.singular_values_, full.singular_values_, rtol=0, atol=0)
    assert sum(part.branch_counts_.values()) == 9


def test_transform_round_trip():
    ds = generate_heat_fem_data(10, 15, seed=1)
    X = ds.matrix().T
    est = IncrementalPOD(mass=ds.mass, tol=0.0).fit(X, sample_weight=ds.grid.deltas)
    Z = est.transform(X)
    assert Z.shape == (15, est.n_components_)
    assert_allclose(est.inverse_transform(Z), X, atol=1e-10)
    assert_allclose(est.components_, est.modes_.T)


def test_refit_resets_state(rng):
    U, M, grid = random_instance(rng, 5, 6)
    est = IncrementalPOD(mass=M)
    est.fit(U.T)
    first = est.singular_values_.copy()
    est.fit(U.T)
    assert_allclose(est.singular_values_, first, rtol=0, atol=0)
    assert est.state_.ell == 6


def test_default_mass_is_identity(rng):
    X = rng.standard_normal((7, 4))
    est = BatchPOD().fit(X)
    assert_allclose(est.singular_values_, np.linalg.svd(X, compute_uv=False), rtol=1e-12)


def test_temporal_functions_agree(rng):
    U, M, grid = random_instance(rng, 5, 5)
    inc = IncrementalPOD(mass=M, variant="two-weight", tol=0.0).fit(U.T, sample_weight=grid.deltas)
    ref = BatchPOD(mass=M, variant="two-weight").fit(U.T, sample_weight=grid.deltas)
    assert_allclose(np.abs(inc.temporal_functions().plain()),
                    np.abs(ref.temporal_functions().plain()), atol=1e-9)
    assert inc.pod_basis().k == ref.pod_basis().k


def test_clone_and_params():
    est = IncrementalPOD(tol=1e-6, variant="two-weight")
    c = clone(est)
    assert c.get_params()["tol"] == 1e-6 and c.get_params()["variant"] == "two-weight"
    with pytest.raises(NotFittedError):
        c.transform(np.ones((1, 3)))


def test_pipeline(rng):
    X = rng.standard_normal((9, 5))
    Z = make_pipeline(IncrementalPOD()).fit_transform(X)
    assert Z.shape[0] == 9


def test_errors(rng):
    X = rng.standard_normal((4, 3))
    with pytest.raises(DimensionMismatchError):
        IncrementalPOD().fit(X, sample_weight=[1.0, 2.0])
    with pytest.raises(ValueError):
        IncrementalPOD().fit(X, sample_weight=[1.0, 0.0, 1.0, 1.0])
    with pytest.raises(DimensionMismatchError):
        IncrementalPOD(mass=np.eye(4)).fit(X)
    est = IncrementalPOD().fit(X)
    with pytest.raises(DimensionMismatchError):
        est.partial_fit(rng.standard_normal((2, 4)))
    with pytest.raises(ValueError):
        IncrementalPOD(variant="three-weight").fit(X)
    assert TimeGrid.unit(4).n_steps == 4
