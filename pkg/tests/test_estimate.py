import numpy as np
import pytest

from comonotone_mc.errors import DomainError, SimulationError
from comonotone_mc.models.estimate import (MCEstimate, covariance_matrix_with_errors, pooled_std_error,
                                           sample_covariance)
from comonotone_mc.models.rng import RngStream, standard_normals, stream_range


def test_same_stream_is_bit_identical():
    a = RngStream(7, 3).generator().standard_normal(100)
    b = RngStream(7, 3).generator().standard_normal(100)
    np.testing.assert_array_equal(a, b)


def test_distinct_streams_differ():
    a = RngStream(7, 3).generator().standard_normal(10)
    b = RngStream(7, 4).generator().standard_normal(10)
    assert not np.array_equal(a, b)


def test_standard_normals_rows_follow_streams():
    rows = standard_normals(stream_range(11, 5, 8), 6)
    np.testing.assert_array_equal(rows[1], RngStream(11, 6).generator().standard_normal(6))


def test_stream_rejects_negative_ids():
    with pytest.raises(DomainError):
        RngStream(-1, 0)
    with pytest.raises(DomainError):
        RngStream(0, -1)


def test_estimate_from_samples():
    est = MCEstimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert est.mean == 2.5
    assert est.variance == pytest.approx(5.0 / 3.0)
    assert est.std_error == pytest.approx(np.sqrt(5.0 / 12.0))


def test_estimate_invariants():
    with pytest.raises(DomainError):
        MCEstimate(0.0, 1.0, 1, 1.0)
    with pytest.raises(DomainError):
        MCEstimate(0.0, -1.0, 10, 0.0)
    with pytest.raises(DomainError):
        MCEstimate(0.0, 1.0, 100, 0.5)


def test_estimate_rejects_non_finite():
    with pytest.raises(SimulationError):
        MCEstimate.from_samples(np.array([1.0, np.nan]))


def test_paired_difference_and_pooled_error():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array([0.5, 1.5, 2.0])
    diff = MCEstimate.paired_difference(a, b)
    assert diff.mean == pytest.approx(np.mean(a - b))
    e1, e2 = MCEstimate.from_samples(a), MCEstimate.from_samples(b)
    assert pooled_std_error(e1, e2) == pytest.approx(np.hypot(e1.std_error, e2.std_error))


def test_sample_covariance_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1000)
    y = x + rng.standard_normal(1000)
    cov, se = sample_covariance(x, y)
    assert cov == pytest.approx(np.cov(x, y)[0, 1])
    assert se > 0


def test_covariance_matrix_with_errors_shape():
    rng = np.random.default_rng(1)
    paths = rng.standard_normal((500, 3))
    cov, se = covariance_matrix_with_errors(paths)
    np.testing.assert_allclose(cov, np.cov(paths, rowvar=False))
    assert se.shape == (3, 3)
    assert np.all(se >= 0)
