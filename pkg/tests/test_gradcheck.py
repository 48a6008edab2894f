# -*- coding: utf-8 -*-

import time

import numpy as np
import pytest

from hierloss.gradcheck import (relativeError, numericGradient,
                                checkLossGradients, checkAdapterGradients,
                                runGradientChecks)


def test_numeric_gradient_of_quadratic():
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    x = np.array([0.5, -1.0])
    grad = numericGradient(lambda v: 0.5 * v.dot(A).dot(v), x, 1e-5)
    np.testing.assert_allclose(grad, A.dot(x), atol=1e-9)


def test_relative_error_floor():
    assert relativeError(np.zeros(3), np.zeros(3)) == 0.0
    assert relativeError([1.0, 0.0], [1.0, 1e-3]) == pytest.approx(1e-3,
                                                                   rel=1e-6)


def test_loss_gradients_match_differences():
    errors = checkLossGradients(instances=100, seed=0)
    assert set(errors) == {"hisce", "tpkl_per_level", "tpkl_global", "total"}
    for name, value in errors.items():
        assert value < 1e-6, name


def test_adapter_gradients_match_differences():
    errors = checkAdapterGradients(instances=100, seed=0)
    assert errors["adapter_A"] < 1e-5
    assert errors["adapter_B"] < 1e-5


def test_full_check_is_fast():
    started = time.perf_counter()
    result = runGradientChecks(instances=100, seed=1)
    assert result["passed"]
    assert time.perf_counter() - started < 10.0
