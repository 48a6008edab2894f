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
Hierarchy evaluation metrics

Accuracy (per level, macro over levels), weighted average precision,
tree-based inconsistency error, and full-path accuracy over a set of
per-level predictions. Predictions are single-label per level.
"""

import logging

import numpy as np
from scipy.special import log_softmax
from sklearn.metrics import precision_score

from .consts import DECODERS
from .utils import HierlossError

__all__ = [
    "MetricInputError", "PredictionSet", "EvalReport",
    "levelAccuracy", "levelPrecision", "weightedAP", "tice", "fpa",
    "evaluate", "decodePredictions"
]

logger = logging.getLogger(__name__)


class MetricInputError(HierlossError):
    """
    Thrown on empty or out-of-range prediction sets
    """
    pass


class PredictionSet(object):
    """N x L predicted ids with their N x L ground-truth paths"""

    def __init__(self, preds, truths, sample_ids=None):
        self.preds = np.atleast_2d(np.asarray(preds, dtype=np.int64))
        self.truths = np.atleast_2d(np.asarray(truths, dtype=np.int64))
        if self.preds.shape != self.truths.shape:
            raise MetricInputError(
                "Predictions {} and truths {} differ in shape".format(
                    self.preds.shape, self.truths.shape))
        if not self.preds.shape[0]:
            raise MetricInputError("Prediction set is empty")
        if sample_ids is None:
            sample_ids = np.arange(self.preds.shape[0])
        self.sample_ids = np.asarray(sample_ids)

    def __len__(self):
        return self.preds.shape[0]

    @property
    def numLevels(self):
        return self.preds.shape[1]

    def checkAgainst(self, taxonomy):
        """Raise unless every id is in range for its taxonomy level"""
        if self.numLevels != taxonomy.numLevels:
            raise MetricInputError(
                "Predictions have {} levels, taxonomy has {}".format(
                    self.numLevels, taxonomy.numLevels))
        for idx, size in enumerate(taxonomy.sizes):
            for name, arr in (("prediction", self.preds),
                              ("truth", self.truths)):
                col = arr[:, idx]
                if col.min() < 0 or col.max() >= size:
                    raise MetricInputError(
                        "{} id out of range at level {}".format(
                            name.capitalize(), idx + 1))


class EvalReport(object):
    """Per-level accuracy, macro accuracy, wAP, TICE, FPA

    invalid_paths counts samples whose predicted path breaks the tree;
    invalid_links[l-2] counts broken (l-1, l) pairs for l = 2..L.
    """

    fields = ("num_samples", "level_accuracy", "accuracy", "wap", "tice",
              "fpa", "invalid_paths", "invalid_links", "level_precision")

    def __init__(self, num_samples, level_accuracy, accuracy, wap, tice,
                 fpa, invalid_paths, invalid_links, level_precision):
        self.num_samples = int(num_samples)
        self.level_accuracy = [float(v) for v in level_accuracy]
        self.accuracy = float(accuracy)
        self.wap = float(wap)
        self.tice = float(tice)
        self.fpa = float(fpa)
        self.invalid_paths = int(invalid_paths)
        self.invalid_links = [int(v) for v in invalid_links]
        self.level_precision = [float(v) for v in level_precision]

    def toDict(self):
        return {name: getattr(self, name) for name in self.fields}

    @classmethod
    def fromDict(cls, data):
        return cls(**{name: data[name] for name in cls.fields})

    def __eq__(self, other):
        if not isinstance(other, EvalReport):
            return NotImplemented
        return self.toDict() == other.toDict()

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        return ("EvalReport(N={}, acc={:.4f}, wAP={:.4f}, TICE={:.4f}, "
                "FPA={:.4f})".format(self.num_samples, self.accuracy,
                                     self.wap, self.tice, self.fpa))


def levelAccuracy(preds):
    """Fraction correct per level and its unweighted mean

    Returns:
        tuple -- (array of per-level accuracies, macro accuracy)
    """
    per_level = np.mean(preds.preds == preds.truths, axis=0)
    return per_level, float(np.mean(per_level))


def levelPrecision(preds, taxonomy):
    """Macro-averaged per-class precision at every level

    Every class of the level takes part in the average; classes that are
    never predicted contribute precision 0.
    """
    preds.checkAgainst(taxonomy)
    return np.array([
        precision_score(preds.truths[:, idx], preds.preds[:, idx],
                        labels=np.arange(size), average="macro",
                        zero_division=0)
        for idx, size in enumerate(taxonomy.sizes)])


def weightedAP(preds, taxonomy):
    """Level precisions weighted by C_l / sum_k C_k"""
    sizes = np.asarray(taxonomy.sizes, dtype=np.float64)
    return float(np.dot(sizes / sizes.sum(), levelPrecision(preds, taxonomy)))


def tice(preds, taxonomy):
    """Fraction of predicted paths that are not root-to-leaf tree paths"""
    preds.checkAgainst(taxonomy)
    valid = np.all(taxonomy.validLinks(preds.preds), axis=1)
    return float(np.mean(~valid))


def fpa(preds):
    """Fraction of samples correct at every level simultaneously"""
    return float(np.mean(np.all(preds.preds == preds.truths, axis=1)))


def evaluate(preds, taxonomy):
    """Compute the full EvalReport of a prediction set"""
    preds.checkAgainst(taxonomy)
    per_level, macro = levelAccuracy(preds)
    links = taxonomy.validLinks(preds.preds)
    invalid = ~np.all(links, axis=1)
    precision = levelPrecision(preds, taxonomy)
    sizes = np.asarray(taxonomy.sizes, dtype=np.float64)
    return EvalReport(
        num_samples=len(preds),
        level_accuracy=per_level,
        accuracy=macro,
        wap=float(np.dot(sizes / sizes.sum(), precision)),
        tice=float(np.mean(invalid)),
        fpa=fpa(preds),
        invalid_paths=int(invalid.sum()),
        invalid_links=np.sum(~links, axis=0),
        level_precision=precision,
    )


def decodePredictions(scores, taxonomy, decode="independent", tau=1.0):
    """Turn per-level scores into per-level class ids

    independent: argmax per level (ties -> lowest id)
    leaf:        argmax at the finest level, expanded to its ancestors
    path:        root-to-leaf path with the largest summed per-level
                 log-softmax of scores / tau

    Arguments:
        scores {list} -- per-level (N, C_l) score arrays
        taxonomy {Taxonomy} -- label tree

    Keyword Arguments:
        decode {str} -- decoding mode (default: {"independent"})
        tau {float} -- temperature for "path" decoding (default: {1.0})

    Returns:
        array -- (N, L) predicted ids
    """
    if len(scores) != taxonomy.numLevels:
        raise MetricInputError("Need one score array per taxonomy level")
    if decode == "independent":
        return np.stack([np.argmax(Z, axis=1) for Z in scores], axis=1)
    leaf_paths = taxonomy.leafPaths()
    if decode == "leaf":
        return leaf_paths[np.argmax(scores[-1], axis=1)].copy()
    if decode == "path":
        total = sum(log_softmax(Z / tau, axis=1)[:, leaf_paths[:, idx]]
                    for idx, Z in enumerate(scores))
        return leaf_paths[np.argmax(total, axis=1)].copy()
    raise MetricInputError(
        "Unknown decoder {!r}, expected one of {}".format(decode, DECODERS))
