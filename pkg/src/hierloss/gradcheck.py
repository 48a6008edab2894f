# -*- coding: utf-8 -*-

# Hierloss: hierarchy-aware classification toolkit
#
# Copyright (C) 2026  The Hierloss contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
# Any modifications to this file must keep this entire header intact.

"""
Finite-difference verification of the analytic gradients

Each check draws randomized instances (L <= 4 levels, C_l <= 10 classes
for losses; d, k, r <= 8 for the adapter) and compares the analytic
gradient with central differences in double precision.
"""

import logging

import numpy as np

from .embedspace import (HierLogits, AdapterState, adapterForward,
                         adapterGrad)
from .losses import (LossWeights, SmoothingTable, hisceLoss, tpKlLoss,
                     totalLoss)
from .utils import HierlossError

__all__ = ["GradientCheckError", "relativeError", "numericGradient",
           "checkLossGradients", "checkAdapterGradients", "runGradientChecks"]

logger = logging.getLogger(__name__)

LOSS_STEP = 1e-5
LOSS_TOL = 1e-6
ADAPTER_STEP = 1e-4
ADAPTER_TOL = 1e-5


class GradientCheckError(HierlossError):
    pass


def relativeError(analytic, numeric, floor=1e-8):
    """|a - n| / max(|a|, |n|, floor), with vector 2-norms"""
    analytic = np.ravel(analytic)
    numeric = np.ravel(numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / scale)


def numericGradient(fcn, x0, step):
    """Central differences of scalar fcn at x0 (any shape)"""
    x = np.array(x0, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        f_plus = fcn(x)
        x[idx] = orig - step
        f_minus = fcn(x)
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * step)
    return grad


def _randomTable(rng, level, size, epsilon):
    """Row-stochastic table with sibling-like support, for checks only"""
    matrix = np.eye(size) * (1.0 - epsilon)
    for i in range(size):
        others = [j for j in range(size) if j != i]
        if not others:
            matrix[i, i] = 1.0
            continue
        picked = rng.choice(others, size=rng.integers(1, len(others) + 1),
                            replace=False)
        matrix[i, picked] = epsilon / len(picked)
    return SmoothingTable(level, matrix, epsilon)


def _randomInstance(rng):
    num = int(rng.integers(1, 5))
    sizes = [int(s) for s in rng.integers(2, 11, size=num)]
    tau = float(rng.uniform(0.5, 2.0))
    levels = [rng.standard_normal(s) for s in sizes]
    path = [int(rng.integers(0, s)) for s in sizes]
    epsilon = float(rng.uniform(0.0, 0.5))
    tables = [_randomTable(rng, lvl + 1, s, epsilon)
              for lvl, s in enumerate(sizes)]
    weights = LossWeights(rng.uniform(0, 3), rng.uniform(0, 3))
    return levels, tau, path, tables, weights


def _splitFlat(flat, sizes):
    bounds = np.cumsum([0] + list(sizes))
    return [flat[bounds[i]:bounds[i + 1]] for i in range(len(sizes))]


def checkLossGradients(instances=100, seed=0, step=LOSS_STEP):
    """Worst relative errors of hisce, tp-kl (both modes) and total loss

    Returns:
        dict -- loss name -> largest relative error seen
    """
    rng = np.random.default_rng(seed)
    worst = {"hisce": 0.0, "tpkl_per_level": 0.0, "tpkl_global": 0.0,
             "total": 0.0}
    for _ in range(instances):
        levels, tau, path, tables, weights = _randomInstance(rng)
        sizes = [z.size for z in levels]
        flat0 = np.concatenate(levels)

        z = levels[-1]
        row = tables[-1].row(path[-1])
        _, grad = hisceLoss(z, row)
        numeric = numericGradient(lambda v: hisceLoss(v, row)[0], z, step)
        worst["hisce"] = max(worst["hisce"], relativeError(grad, numeric))

        for mode, key in (("per-level", "tpkl_per_level"),
                          ("global", "tpkl_global")):
            _, grads = tpKlLoss(HierLogits(levels, tau), path, mode)
            numeric = numericGradient(
                lambda v: tpKlLoss(HierLogits(_splitFlat(v, sizes), tau),
                                   path, mode)[0], flat0, step)
            worst[key] = max(worst[key], relativeError(
                np.concatenate(grads), numeric))

        result = totalLoss(HierLogits(levels, tau), path, tables, weights)
        numeric = numericGradient(
            lambda v: totalLoss(HierLogits(_splitFlat(v, sizes), tau), path,
                                tables, weights).total, flat0, step)
        worst["total"] = max(worst["total"], relativeError(
            np.concatenate(result.grads), numeric))
    return worst


def checkAdapterGradients(instances=100, seed=0, step=ADAPTER_STEP):
    """Worst relative errors of the adapter's A and B gradients

    The scalar checked is upstream . adapterForward(state, x).
    """
    rng = np.random.default_rng(seed)
    worst = {"adapter_A": 0.0, "adapter_B": 0.0}
    for _ in range(instances):
        d, k, r = (int(v) for v in rng.integers(1, 9, size=3))
        state = AdapterState(rng.standard_normal((d, k)),
                             rng.standard_normal((r, k)),
                             rng.standard_normal((d, r)),
                             rng.uniform(0.5, 32.0))
        x = rng.standard_normal(k)
        upstream = rng.standard_normal(d)
        grad_A, grad_B = adapterGrad(state, x, upstream)

        def lossA(A):
            shifted = AdapterState(state.W0, A, state.B, state.alpha)
            return np.dot(upstream, adapterForward(shifted, x))

        def lossB(B):
            shifted = AdapterState(state.W0, state.A, B, state.alpha)
            return np.dot(upstream, adapterForward(shifted, x))

        worst["adapter_A"] = max(worst["adapter_A"], relativeError(
            grad_A, numericGradient(lossA, state.A, step)))
        worst["adapter_B"] = max(worst["adapter_B"], relativeError(
            grad_B, numericGradient(lossB, state.B, step)))
    return worst


def runGradientChecks(instances=100, seed=0):
    """Run every check; returns a JSON-ready summary with pass/fail"""
    errors = checkLossGradients(instances, seed)
    errors.update(checkAdapterGradients(instances, seed))
    limits = {name: (ADAPTER_TOL if name.startswith("adapter") else LOSS_TOL)
              for name in errors}
    passed = all(errors[name] < limits[name] for name in errors)
    for name in sorted(errors):
        logger.info("gradient check %-16s max rel. error %.3e (limit %.0e)",
                    name, errors[name], limits[name])
    return {"instances": instances, "seed": seed, "max_rel_error": errors,
            "tolerance": limits, "passed": passed}
