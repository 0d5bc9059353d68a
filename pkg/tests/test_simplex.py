import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bipartite_clustering.errors import InvalidInputError
from bipartite_clustering.simplex import project_rows_simplex, project_simplex
from oracles import simplex_bruteforce

vectors = arrays(
    np.float64,
    st.integers(1, 8),
    elements=st.floats(-5, 5, allow_nan=False, allow_infinity=False),
)


def test_point_already_on_simplex():
    np.testing.assert_array_equal(project_simplex([0.5, 0.5]), [0.5, 0.5])


def test_two_point_example():
    out = project_simplex([1.2, -0.2])
    np.testing.assert_allclose(out, simplex_bruteforce([1.2, -0.2]), atol=1e-15)
    np.testing.assert_array_equal(out, [1.0, 0.0])


def test_uniform_by_symmetry():
    np.testing.assert_allclose(project_simplex([0.3, 0.3, 0.3]), np.full(3, 1 / 3), atol=1e-15)


def test_single_entry():
    np.testing.assert_array_equal(project_simplex([-7.0]), [1.0])


@pytest.mark.parametrize("bad", [[], [np.nan, 1.0], [np.inf, 0.0]])
def test_rejects_bad_input(bad):
    with pytest.raises(InvalidInputError):
        project_simplex(bad)


def test_rows_examples():
    out = project_rows_simplex([[1.2, -0.2], [0.3, 0.3]])
    np.testing.assert_allclose(out, [[1, 0], [0.5, 0.5]], atol=1e-15)
    eye = np.eye(3)
    np.testing.assert_array_equal(project_rows_simplex(eye), eye)
    assert project_rows_simplex(np.zeros((0, 3))).shape == (0, 3)


def test_rows_match_vector_projection(rng):
    M = rng.uniform(-2, 2, size=(40, 5))
    rows = np.array([project_simplex(m) for m in M])
    np.testing.assert_array_equal(project_rows_simplex(M), rows)


def test_ties_resolve_deterministically():
    out = project_simplex([1.0, 1.0, 1.0, -3.0])
    np.testing.assert_allclose(out, [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-15)


@settings(max_examples=300, deadline=None)
@given(vectors)
def test_kkt_conditions(x0):
    x = project_simplex(x0)
    assert x.min() >= 0.0
    assert abs(x.sum() - 1.0) <= 1e-12
    support = x > 0
    # common shift on the support; zeros sit at or below the threshold
    alpha = np.mean(x[support] - x0[support])
    np.testing.assert_allclose(x[support] - x0[support], alpha, atol=1e-10)
    assert np.all(x0[~support] + alpha <= 1e-10)


@settings(max_examples=300, deadline=None)
@given(vectors)
def test_idempotent(x0):
    x = project_simplex(x0)
    np.testing.assert_array_equal(project_simplex(x), x)


@settings(max_examples=200, deadline=None)
@given(vectors, st.data())
def test_nonexpansive(x0, data):
    y0 = data.draw(arrays(np.float64, x0.shape, elements=st.floats(-5, 5, allow_nan=False)))
    dist = np.linalg.norm(project_simplex(x0) - project_simplex(y0))
    assert dist <= np.linalg.norm(x0 - y0) + 1e-12
