# -*- coding: utf-8 -*-

import numpy as np
import pytest

from hierloss.embedspace import (EmbeddingError, AdapterState, HierLogits,
                                 initAdapter, cosineLogits,
                                 cosineLogitsBatch, cosineBackward,
                                 normalizeRows, adapterForward,
                                 adapterForwardBatch, adapterGrad,
                                 adapterGradBatch, saveAdapter, loadAdapter)
from hierloss.gradcheck import numericGradient, relativeError


def randomState(rng, d=4, k=3, r=2, alpha=8.0):
    return AdapterState(rng.standard_normal((d, k)),
                        rng.standard_normal((r, k)),
                        rng.standard_normal((d, r)), alpha)


# Cosine logits
######################################################################

def test_identical_vectors(rng):
    v = rng.standard_normal(5)
    assert cosineLogits(v, v[None, :])[0] == pytest.approx(1.0)


def test_orthogonal_vectors():
    assert cosineLogits([1.0, 0.0], [[0.0, 3.0]])[0] == pytest.approx(0.0)


def test_closed_form():
    assert cosineLogits([1.0, 0.0], [[1.0, 1.0]])[0] == \
        pytest.approx(1.0 / np.sqrt(2.0))


def test_rescaling_invariance(rng):
    v = rng.standard_normal(6)
    E = rng.standard_normal((4, 6))
    scaled = E * np.array([[0.5], [2.0], [7.0], [0.1]])
    np.testing.assert_allclose(cosineLogits(3.0 * v, scaled),
                               cosineLogits(v, E), atol=1e-12)


def test_values_in_range(rng):
    z = cosineLogits(rng.standard_normal(8), rng.standard_normal((20, 8)))
    assert np.all(z <= 1.0) and np.all(z >= -1.0)


@pytest.mark.parametrize("vec, embeds", [
    ([0.0, 0.0], [[1.0, 0.0]]),
    ([1.0, 0.0], [[0.0, 0.0]]),
    ([1.0, 0.0, 1.0], [[1.0, 0.0]]),
    ([np.nan, 1.0], [[1.0, 0.0]]),
])
def test_cosine_errors(vec, embeds):
    with pytest.raises(EmbeddingError):
        cosineLogits(vec, embeds)


def test_batch_matches_single(rng):
    H = rng.standard_normal((5, 4))
    E = rng.standard_normal((3, 4))
    Z, unit, norms = cosineLogitsBatch(H, normalizeRows(E))
    for row in range(5):
        np.testing.assert_allclose(Z[row], cosineLogits(H[row], E),
                                   atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(unit, axis=1), 1.0)


def test_cosine_backward_matches_differences(rng):
    H = rng.standard_normal((3, 4))
    unit_embeds = normalizeRows(rng.standard_normal((5, 4)))
    G = rng.standard_normal((3, 5))

    def loss(flat):
        Z = cosineLogitsBatch(flat.reshape(3, 4), unit_embeds)[0]
        return np.sum(G * Z)

    Z, unit, norms = cosineLogitsBatch(H, unit_embeds)
    analytic = cosineBackward(G, Z, unit, norms, unit_embeds)
    numeric = numericGradient(loss, H.ravel(), 1e-6).reshape(3, 4)
    assert relativeError(analytic, numeric) < 1e-6


# Adapter
######################################################################

def test_zero_b_returns_base(rng):
    state = randomState(rng)
    state.B[:] = 0.0
    x = rng.standard_normal(3)
    np.testing.assert_array_equal(adapterForward(state, x), state.W0.dot(x))


def test_pure_low_rank_path(rng):
    state = randomState(rng, alpha=2.0)
    state.W0[:] = 0.0
    x = rng.standard_normal(3)
    np.testing.assert_allclose(adapterForward(state, x),
                               state.B.dot(state.A.dot(x)), atol=1e-12)


def test_parameter_count(rng):
    state = randomState(rng, d=4, k=3, r=2)
    assert state.numTrainable == 14
    assert state.effectiveWeight().shape == (4, 3)


def test_forward_is_linear(rng):
    state = randomState(rng)
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(
        adapterForward(state, 2.0 * x - y),
        2.0 * adapterForward(state, x) - adapterForward(state, y),
        atol=1e-12)


def test_forward_uses_effective_weight(rng):
    state = randomState(rng)
    X = rng.standard_normal((6, 3))
    np.testing.assert_allclose(adapterForwardBatch(state, X),
                               X.dot(state.effectiveWeight().T), atol=1e-12)


def test_forward_dimension_mismatch(rng):
    with pytest.raises(EmbeddingError):
        adapterForward(randomState(rng), np.ones(4))


def test_zero_upstream_gives_zero_gradients(rng):
    grad_A, grad_B = adapterGrad(randomState(rng), rng.standard_normal(3),
                                 np.zeros(4))
    assert not np.any(grad_A) and not np.any(grad_B)


def test_gradients_linear_in_alpha(rng):
    state = randomState(rng, alpha=3.0)
    doubled = AdapterState(state.W0, state.A, state.B, 6.0)
    x, u = rng.standard_normal(3), rng.standard_normal(4)
    for single, double in zip(adapterGrad(state, x, u),
                              adapterGrad(doubled, x, u)):
        np.testing.assert_array_equal(double, 2.0 * single)


def test_gradients_match_differences(rng):
    state = randomState(rng, d=5, k=4, r=3)
    x, u = rng.standard_normal(4), rng.standard_normal(5)
    grad_A, grad_B = adapterGrad(state, x, u)

    def lossA(A):
        return u.dot(adapterForward(
            AdapterState(state.W0, A, state.B, state.alpha), x))

    def lossB(B):
        return u.dot(adapterForward(
            AdapterState(state.W0, state.A, B, state.alpha), x))

    assert relativeError(grad_A, numericGradient(lossA, state.A, 1e-4)) < 1e-5
    assert relativeError(grad_B, numericGradient(lossB, state.B, 1e-4)) < 1e-5


def test_batch_gradient_is_sum(rng):
    state = randomState(rng)
    X, U = rng.standard_normal((4, 3)), rng.standard_normal((4, 4))
    grad_A, grad_B = adapterGradBatch(state, X, U)
    singles = [adapterGrad(state, x, u) for x, u in zip(X, U)]
    np.testing.assert_allclose(grad_A, sum(g[0] for g in singles), atol=1e-12)
    np.testing.assert_allclose(grad_B, sum(g[1] for g in singles), atol=1e-12)


def test_init_identity(rng):
    state = initAdapter(5, 2, 4.0, rng)
    x = rng.standard_normal(5)
    np.testing.assert_array_equal(adapterForward(state, x), x)
    assert not np.any(state.B)
    assert np.all(np.abs(state.A) <= 1.0 / np.sqrt(5))


def test_init_random_base_is_orthonormal(rng):
    state = initAdapter(3, 2, 4.0, rng, dim_out=6, base="random")
    assert state.W0.shape == (6, 3)
    np.testing.assert_allclose(state.W0.T.dot(state.W0), np.eye(3),
                               atol=1e-12)


def test_init_errors(rng):
    with pytest.raises(EmbeddingError):
        initAdapter(3, 2, 4.0, rng, dim_out=4)
    with pytest.raises(EmbeddingError):
        initAdapter(3, 2, 4.0, rng, base="svd")
    with pytest.raises(EmbeddingError):
        initAdapter(3, 2, 0.0, rng)


@pytest.mark.parametrize("W0", [np.ones(4), np.ones((2, 3, 4)), 1.0])
def test_adapter_base_must_be_matrix(W0):
    with pytest.raises(EmbeddingError, match="matrix"):
        AdapterState(W0, np.zeros((1, 4)), np.zeros((4, 1)), 1.0)


def test_adapter_file(tmp_path, rng):
    state = randomState(rng)
    path = str(tmp_path / "adapter.npz")
    saveAdapter(state, path)
    loaded = loadAdapter(path)
    np.testing.assert_array_equal(loaded.effectiveWeight(),
                                  state.effectiveWeight())
    assert loaded.alpha == state.alpha


def test_hier_logits_validation():
    logits = HierLogits([np.zeros(2), np.ones(3)], tau=0.5)
    assert logits.sizes == (2, 3)
    with pytest.raises(EmbeddingError):
        HierLogits([np.array([np.inf, 0.0])])
    with pytest.raises(EmbeddingError):
        HierLogits([np.zeros(2)], tau=0.0)
