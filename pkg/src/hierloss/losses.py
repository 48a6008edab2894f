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
Hierarchy-aware training objectives and their gradients w.r.t. logits

total = ce_weight * CE + lambda1 * TP-KL + lambda2 * HiSCE

CE and HiSCE are summed over levels. All three terms see the tempered
scores z / tau; gradients returned here are w.r.t. the raw scores z.
"""

import logging

import numpy as np
from scipy.special import log_softmax, xlogy

from .consts import TPKL_MODES
from .embedspace import HierLogits
from .utils import HierlossError

__all__ = [
    "LossInputError", "SmoothingTable", "LossWeights", "LossResult",
    "buildSmoothingTable", "buildSmoothingTables", "pathTarget",
    "crossEntropy", "hisceLoss", "tpKlLoss", "totalLoss", "totalLossBatch"
]

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9


class LossInputError(HierlossError):
    """
    Thrown on non-finite logits, invalid targets, or shape mismatches
    """
    pass


class SmoothingTable(object):
    """Row-stochastic sibling smoothing targets of one level

    Row i keeps 1 - epsilon on class i and spreads epsilon uniformly over
    the siblings of i. Only children keep the full mass.
    """

    def __init__(self, level, matrix, epsilon):
        self.level = level
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.matrix.flags.writeable = False
        self.epsilon = float(epsilon)

    def __len__(self):
        return self.matrix.shape[0]

    def row(self, class_id):
        return self.matrix[class_id]


class LossWeights(object):
    """Weights of the TP-KL (lambda1) and HiSCE (lambda2) terms

    `ce` weights the plain cross-entropy term; ablations set it to 0 to
    drop CE entirely.
    """

    def __init__(self, lambda1=0.0, lambda2=0.0, ce=1.0):
        self.lambda1 = float(lambda1)
        self.lambda2 = float(lambda2)
        self.ce = float(ce)
        for name in ("lambda1", "lambda2", "ce"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise LossInputError(
                    "Loss weight {} must be finite and >= 0, got {!r}".format(
                        name, value))

    def toDict(self):
        return {"lambda1": self.lambda1, "lambda2": self.lambda2,
                "ce": self.ce}

    def __repr__(self):
        return "LossWeights(lambda1={}, lambda2={}, ce={})".format(
            self.lambda1, self.lambda2, self.ce)


class LossResult(object):
    """Loss value, unweighted per-term values, and per-level gradients"""

    def __init__(self, total, terms, grads):
        self.total = float(total)
        self.terms = terms
        self.grads = grads

    def toDict(self):
        result = {"total": self.total}
        result.update(self.terms)
        return result


# Smoothing targets
######################################################################

def buildSmoothingTable(taxonomy, level, epsilon):
    """Per-level label-smoothing table over sibling classes

    Arguments:
        taxonomy {Taxonomy} -- label tree
        level {int} -- 1-based level number
        epsilon {float} -- mass moved onto siblings, 0 <= epsilon < 1

    Returns:
        SmoothingTable -- C_l x C_l row-stochastic table
    """
    epsilon = float(epsilon)
    if not 0.0 <= epsilon < 1.0:
        raise LossInputError(
            "Smoothing epsilon must lie in [0, 1), got {!r}".format(epsilon))
    size = len(taxonomy.level(level))
    matrix = np.zeros((size, size))
    for i in range(size):
        sibs = sorted(taxonomy.siblings(level, i))
        if not sibs:
            matrix[i, i] = 1.0
            continue
        matrix[i, i] = 1.0 - epsilon
        matrix[i, sibs] = epsilon / len(sibs)
    return SmoothingTable(level, matrix, epsilon)


def buildSmoothingTables(taxonomy, epsilon, epsilon_levels=None):
    """One SmoothingTable per level, with optional per-level epsilons"""
    if epsilon_levels:
        if len(epsilon_levels) != taxonomy.numLevels:
            raise LossInputError(
                "Expected {} per-level epsilons, got {}".format(
                    taxonomy.numLevels, len(epsilon_levels)))
        values = list(epsilon_levels)
    else:
        values = [epsilon] * taxonomy.numLevels
    return [buildSmoothingTable(taxonomy, level, eps)
            for level, eps in enumerate(values, start=1)]


def pathTarget(sizes, path):
    """Concatenated 1/L-scaled one-hot path target, coarse -> fine"""
    sizes = tuple(sizes)
    if len(path) != len(sizes):
        raise LossInputError("Path length does not match level count")
    target = np.zeros(sum(sizes))
    offset = 0
    for size, cid in zip(sizes, path):
        if not 0 <= cid < size:
            raise LossInputError("Path id {} out of range".format(cid))
        target[offset + cid] = 1.0 / len(sizes)
        offset += size
    return target


# Single-sample losses
######################################################################

def _checkLogits(logits):
    logits = np.asarray(logits, dtype=np.float64).ravel()
    if not logits.size:
        raise LossInputError("Empty logit vector")
    if not np.all(np.isfinite(logits)):
        raise LossInputError("Non-finite logits")
    return logits


def crossEntropy(logits, target):
    """Standard softmax cross-entropy at class index `target`

    Returns:
        tuple -- (loss, gradient w.r.t. logits)
    """
    logits = _checkLogits(logits)
    if not 0 <= target < logits.size:
        raise LossInputError("Target {} out of range".format(target))
    logp = log_softmax(logits)
    grad = np.exp(logp)
    grad[target] -= 1.0
    return -logp[target], grad


def hisceLoss(logits, target_row):
    """Cross-entropy against a smoothed target distribution

    Arguments:
        logits {array} -- (C,) scores
        target_row {array} -- (C,) target distribution, usually a row of
                              a SmoothingTable

    Returns:
        tuple -- (loss, gradient softmax(logits) - target_row)
    """
    logits = _checkLogits(logits)
    target_row = np.asarray(target_row, dtype=np.float64).ravel()
    if target_row.size != logits.size:
        raise LossInputError(
            "Target row length {} does not match logits {}".format(
                target_row.size, logits.size))
    if np.any(target_row < 0) or \
            abs(target_row.sum() - 1.0) > ROW_SUM_TOL:
        raise LossInputError("Target row is not a probability distribution")
    logp = log_softmax(logits)
    return -np.dot(target_row, logp), np.exp(logp) - target_row


def _pathLogProbs(hier_logits, mode):
    """log P over the concatenated levels, plus per-level probabilities"""
    tempered = [z / hier_logits.tau for z in hier_logits.levels]
    num = len(tempered)
    if mode == "per-level":
        logps = [log_softmax(u) for u in tempered]
        return np.concatenate(logps) - np.log(num)
    elif mode == "global":
        return log_softmax(np.concatenate(tempered))
    raise LossInputError(
        "Unknown TP-KL mode {!r}, expected one of {}".format(
            mode, TPKL_MODES))


def tpKlLoss(hier_logits, path, mode="per-level"):
    """Tree-path KL divergence KL(Y || P) for one sample

    per-level: P concatenates softmax(z_l / tau) / L, so each block sums
               to 1/L and P can match the path target exactly.
    global:    P is one softmax over all tempered scores.

    Arguments:
        hier_logits {HierLogits} -- per-level raw scores and tau
        path {sequence} -- ground-truth class id per level

    Keyword Arguments:
        mode {str} -- "per-level" or "global" (default: {"per-level"})

    Returns:
        tuple -- (loss, list of per-level gradients w.r.t. raw scores)
    """
    if not isinstance(hier_logits, HierLogits):
        hier_logits = HierLogits(hier_logits)
    sizes = hier_logits.sizes
    target = pathTarget(sizes, path)
    logP = _pathLogProbs(hier_logits, mode)
    loss = np.sum(xlogy(target, target)) - np.dot(target, logP)

    probs = np.exp(logP)
    grads = []
    offset = 0
    for size in sizes:
        block = slice(offset, offset + size)
        if mode == "per-level":
            # block of P sums to 1/L, matching the target block's mass
            mass = target[block].sum()
            grad = mass * probs[block] * len(sizes) - target[block]
        else:
            grad = probs[block] - target[block]
        grads.append(grad / hier_logits.tau)
        offset += size
    return max(loss, 0.0), grads


def totalLoss(hier_logits, path, tables, weights, mode="per-level"):
    """Combined objective for one sample

    Arguments:
        hier_logits {HierLogits} -- per-level raw scores and tau
        path {sequence} -- ground-truth class id per level
        tables {list} -- one SmoothingTable per level
        weights {LossWeights} -- term weights

    Keyword Arguments:
        mode {str} -- TP-KL mode (default: {"per-level"})

    Returns:
        LossResult -- total, unweighted terms, per-level gradients
    """
    sizes = hier_logits.sizes
    if len(tables) != len(sizes) or len(path) != len(sizes):
        raise LossInputError("Levels of logits, path and tables differ")
    tau = hier_logits.tau

    ce_total = hisce_total = 0.0
    ce_grads = []
    hisce_grads = []
    for z, cid, table in zip(hier_logits.levels, path, tables):
        if len(table) != z.size:
            raise LossInputError("Smoothing table size does not match")
        ce, ce_grad = crossEntropy(z / tau, cid)
        hs, hs_grad = hisceLoss(z / tau, table.row(cid))
        ce_total += ce
        hisce_total += hs
        ce_grads.append(ce_grad / tau)
        hisce_grads.append(hs_grad / tau)
    tpkl, tpkl_grads = tpKlLoss(hier_logits, path, mode)

    total = (weights.ce * ce_total + weights.lambda1 * tpkl +
             weights.lambda2 * hisce_total)
    grads = [weights.ce * g_ce + weights.lambda1 * g_kl +
             weights.lambda2 * g_hs
             for g_ce, g_kl, g_hs in zip(ce_grads, tpkl_grads, hisce_grads)]
    terms = {"ce": ce_total, "tpkl": tpkl, "hisce": hisce_total}
    return LossResult(total, terms, grads)


# Batched objective
######################################################################

def totalLossBatch(scores, paths, tables, weights, tau, mode="per-level"):
    """Mean combined objective over a batch

    Arguments:
        scores {list} -- per-level (N, C_l) raw score arrays
        paths {array} -- (N, L) ground-truth ids
        tables {list} -- one SmoothingTable per level
        weights {LossWeights} -- term weights
        tau {float} -- temperature

    Keyword Arguments:
        mode {str} -- TP-KL mode (default: {"per-level"})

    Returns:
        LossResult -- batch means; grads are per-level (N, C_l) arrays of
                      the mean loss
    """
    paths = np.asarray(paths, dtype=np.int64)
    num = len(scores)
    count = paths.shape[0]
    if paths.shape != (count, num) or len(tables) != num or not count:
        raise LossInputError("Batch shapes of scores, paths, tables differ")
    for Z in scores:
        if Z.shape[0] != count:
            raise LossInputError("Batch shapes of scores and paths differ")
        if not np.all(np.isfinite(Z)):
            raise LossInputError("Non-finite logits")
    rows = np.arange(count)

    tempered = [Z / tau for Z in scores]
    logps = [log_softmax(U, axis=1) for U in tempered]
    probs = [np.exp(logp) for logp in logps]
    onehots = []
    for level, size in enumerate(Z.shape[1] for Z in scores):
        onehot = np.zeros((count, size))
        onehot[rows, paths[:, level]] = 1.0
        onehots.append(onehot)

    ce = sum(-logp[rows, paths[:, lvl]] for lvl, logp in enumerate(logps))
    smoothed = [table.matrix[paths[:, lvl]]
                for lvl, table in enumerate(tables)]
    hisce = sum(-np.sum(target * logp, axis=1)
                for target, logp in zip(smoothed, logps))

    if mode == "per-level":
        gathered = sum(logp[rows, paths[:, lvl]]
                       for lvl, logp in enumerate(logps))
        tpkl = -gathered / num
        kl_grads = [(p - onehot) / num for p, onehot in zip(probs, onehots)]
    elif mode == "global":
        logP = log_softmax(np.concatenate(tempered, axis=1), axis=1)
        target = np.concatenate(onehots, axis=1) / num
        tpkl = np.log(1.0 / num) - np.sum(target * logP, axis=1)
        full = np.exp(logP) - target
        bounds = np.cumsum([0] + [Z.shape[1] for Z in scores])
        kl_grads = [full[:, bounds[i]:bounds[i + 1]] for i in range(num)]
    else:
        raise LossInputError(
            "Unknown TP-KL mode {!r}, expected one of {}".format(
                mode, TPKL_MODES))
    tpkl = np.maximum(tpkl, 0.0)

    grads = []
    for p, onehot, target, g_kl in zip(probs, onehots, smoothed, kl_grads):
        g = (weights.ce * (p - onehot) + weights.lambda1 * g_kl +
             weights.lambda2 * (p - target))
        grads.append(g / (tau * count))

    terms = {"ce": float(np.mean(ce)), "tpkl": float(np.mean(tpkl)),
             "hisce": float(np.mean(hisce))}
    total = (weights.ce * terms["ce"] + weights.lambda1 * terms["tpkl"] +
             weights.lambda2 * terms["hisce"])
    return LossResult(total, terms, grads)
