import numpy as np
import pytest
from hypothesis import given, strategies as st

from patterngcd.errors import DataFormatError
from patterngcd.validation import as_float_matrix, check_unit_rows, normalize_rows, rng_for


def test_as_float_matrix_accepts_lists():
    X = as_float_matrix([[1, 2], [3, 4]])
    assert X.dtype == np.float64 and X.shape == (2, 2)


def test_as_float_matrix_promotes_vector_to_row():
    assert as_float_matrix([1.0, 2.0]).shape == (1, 2)


def test_as_float_matrix_rejects_3d():
    with pytest.raises(ValueError):
        as_float_matrix(np.zeros((2, 2, 2)))


def test_as_float_matrix_rejects_nan():
    with pytest.raises(ValueError):
        as_float_matrix([[1.0, float("nan")]])


def test_normalize_rows_unit_output():
    X = np.array([[3.0, 4.0], [0.0, 2.0]])
    N = normalize_rows(X)
    assert np.allclose(np.linalg.norm(N, axis=1), 1.0)
    assert np.allclose(N[0], [0.6, 0.8])


def test_normalize_rows_zero_norm_rejected():
    with pytest.raises(DataFormatError, match="zero-norm embedding"):
        normalize_rows(np.array([[0.0, 0.0]]))


def test_check_unit_rows_tolerance():
    check_unit_rows(np.array([[1.0 + 5e-7, 0.0]]))
    with pytest.raises(ValueError):
        check_unit_rows(np.array([[1.1, 0.0]]))


@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), min_size=1, max_size=8))
def test_normalize_rows_idempotent(rows):
    X = np.asarray(rows, dtype=np.float64)
    if (np.linalg.norm(X, axis=1) < 1e-6).any():
        return
    once = normalize_rows(X)
    assert np.abs(normalize_rows(once) - once).max() <= 1e-12


def test_rng_for_deterministic_and_key_sensitive():
    a = rng_for(7, 3, 1).integers(1 << 30, size=4)
    b = rng_for(7, 3, 1).integers(1 << 30, size=4)
    c = rng_for(7, 3, 2).integers(1 << 30, size=4)
    assert (a == b).all()
    assert (a != c).any()
