import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ggad.errors import LengthMismatch, NegativeStd, ShapeMismatch
from ggad.graph import build_graph, normalize_adjacency
from ggad.linalg import (
    cosine_sim,
    gaussian,
    glorot_init,
    make_rng,
    row_normalize,
    row_normalize_backward,
    spmm,
)

from conftest import dense_normalized, random_graph


def test_spmm_single_edge_identity():
    adj = normalize_adjacency(build_graph([(0, 1)], np.zeros((2, 1))))
    np.testing.assert_allclose(spmm(adj, np.eye(2)), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)


def test_spmm_isolated_node_passthrough():
    adj = normalize_adjacency(build_graph([(0, 1)], np.zeros((3, 1))))
    x = np.random.default_rng(0).normal(size=(3, 4))
    np.testing.assert_array_equal(spmm(adj, x)[2], x[2])


@pytest.mark.parametrize("seed", range(8))
def test_spmm_matches_dense(seed):
    g = random_graph(seed, n=50, p=0.1)
    x = np.random.default_rng(seed).normal(size=(50, 6))
    np.testing.assert_allclose(spmm(normalize_adjacency(g), x), dense_normalized(g) @ x,
                               rtol=0, atol=1e-12)


def test_spmm_linear_and_shape_checked():
    g = random_graph(1, n=30)
    adj = normalize_adjacency(g)
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=(30, 5)), rng.normal(size=(30, 5))
    np.testing.assert_allclose(spmm(adj, x + y), spmm(adj, x) + spmm(adj, y), atol=1e-12)
    with pytest.raises(ShapeMismatch):
        spmm(adj, np.zeros((29, 5)))


def test_cosine_examples():
    assert cosine_sim([1, 0], [1, 0]) == 1.0
    assert cosine_sim([1, 0], [0, 1]) == 0.0
    assert cosine_sim([1, 1], [1, 0]) == pytest.approx(0.70710678, abs=1e-8)
    assert cosine_sim([0, 0], [1, 0]) == 0.0
    with pytest.raises(LengthMismatch):
        cosine_sim([1, 0], [1, 0, 0])


vec = arrays(np.float64, 5, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=100, deadline=None)
@given(a=vec, b=vec)
def test_cosine_symmetric_and_scale_invariant(a, b):
    c = cosine_sim(a, b)
    assert -1 - 1e-12 <= c <= 1 + 1e-12
    assert c == pytest.approx(cosine_sim(b, a), abs=1e-12)
    if np.linalg.norm(a) > 1e-6:
        assert cosine_sim(2 * a, b) == pytest.approx(c, abs=1e-12)


def test_row_normalize_backward_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 3))
    x[2] = 0.0
    g = rng.normal(size=(4, 3))
    unit, norms = row_normalize(x)
    analytic = row_normalize_backward(g, unit, norms)
    num = np.zeros_like(x)
    for i, j in np.ndindex(x.shape):
        if i == 2:
            continue
        xp, xm = x.copy(), x.copy()
        xp[i, j] += 1e-6
        xm[i, j] -= 1e-6
        num[i, j] = (np.sum(g * row_normalize(xp)[0]) - np.sum(g * row_normalize(xm)[0])) / 2e-6
    np.testing.assert_allclose(analytic, num, atol=1e-8)
    assert (analytic[2] == 0).all()


def test_gaussian_constant_when_std_zero():
    out = gaussian(make_rng(0), 0.01, 0.0, (3, 4))
    assert (out == 0.01).all()
    with pytest.raises(NegativeStd):
        gaussian(make_rng(0), 0.0, -1.0, (2,))


def test_gaussian_sample_mean():
    n = 100_000
    s = gaussian(make_rng(3), 0.01, 0.005, (n,))
    assert abs(s.mean() - 0.01) < 3 * 0.005 / math.sqrt(n)


def test_gaussian_deterministic():
    np.testing.assert_array_equal(gaussian(make_rng(9), 0, 1, (5, 5)),
                                  gaussian(make_rng(9), 0, 1, (5, 5)))


def test_glorot():
    w = glorot_init(make_rng(0), 2, 2)
    bound = math.sqrt(6 / 4)
    assert bound == pytest.approx(1.2247, abs=1e-4)
    assert (np.abs(w) <= bound).all()
    big = glorot_init(make_rng(1), 40, 60)
    assert (np.abs(big) <= math.sqrt(6 / 100)).all()
    np.testing.assert_array_equal(glorot_init(make_rng(5), 3, 7), glorot_init(make_rng(5), 3, 7))


def test_rng_golden_values():
    assert make_rng(12345).random(3).tolist() == [
        0.22733602246716966, 0.31675833970975287, 0.7973654573327341,
    ]
    assert make_rng(7).integers(0, 2**31, 3).tolist() == [2029167941, 1342382292, 1469265226]
