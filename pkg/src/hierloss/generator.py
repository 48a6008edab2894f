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
Generates synthetic hierarchical feature datasets.
"""

import logging

import numpy as np

from .dataio import HierDataset, splitIndices, classMeanEmbeddings
from .taxonomy import balancedTaxonomy, TaxonomyError
from .utils import HierlossError

__all__ = ["SynthSpecError", "SynthSpec", "SyntheticGenerator",
           "generateSynthetic"]

logger = logging.getLogger(__name__)


class SynthSpecError(HierlossError):
    pass


class SynthSpec(object):
    """Parameters of a synthetic benchmark

    Attributes:
        branching {tuple} -- branching factor per level (balanced tree)
        dim {int} -- feature dimension
        per_leaf {int} -- samples drawn per finest-level class
        spread {float} -- std of the per-sample noise around leaf means
        signal {float} -- scale of each node's offset from its parent mean
        seed {int} -- generator seed
        val_fraction {float} -- held-out share of samples
    """

    def __init__(self, branching=(3, 3, 3), dim=16, per_leaf=20, spread=0.5,
                 signal=0.6, seed=0, val_fraction=0.2):
        self.branching = tuple(int(b) for b in branching)
        self.dim = int(dim)
        self.per_leaf = int(per_leaf)
        self.spread = float(spread)
        self.signal = float(signal)
        self.seed = int(seed)
        self.val_fraction = float(val_fraction)
        self._validate()

    def _validate(self):
        if not self.branching or min(self.branching) < 1:
            raise SynthSpecError("Branching factors must be >= 1")
        if self.per_leaf < 1:
            raise SynthSpecError("Need at least one sample per leaf")
        if self.dim < 1:
            raise SynthSpecError("Feature dimension must be >= 1")
        if not self.spread > 0:
            raise SynthSpecError("Spread must be > 0")
        if not self.signal > 0:
            raise SynthSpecError("Signal strength must be > 0")

    def toDict(self):
        return {"branching": list(self.branching), "dim": self.dim,
                "per_leaf": self.per_leaf, "spread": self.spread,
                "signal": self.signal, "seed": self.seed,
                "val_fraction": self.val_fraction}


class SyntheticGenerator(object):
    """Synthetic dataset generator

    Level-1 means are standard normal vectors; every deeper node adds an
    offset of scale `signal` to its parent's mean, so classes sharing an
    ancestor share that ancestor's component. Samples are leaf means plus
    isotropic noise of scale `spread`.
    """

    def __init__(self, spec):
        self.spec = spec
        try:
            self.taxonomy = balancedTaxonomy(spec.branching)
        except TaxonomyError as e:
            raise SynthSpecError(str(e))
        self.rng = np.random.default_rng(spec.seed)

    def generate(self):
        """Returns a HierDataset with split and class-mean embeddings"""
        spec = self.spec
        means = self.nodeMeans()
        leaf_paths = self.taxonomy.leafPaths()
        num_leaves = leaf_paths.shape[0]

        leaves = np.repeat(np.arange(num_leaves), spec.per_leaf)
        noise = self.rng.standard_normal((leaves.size, spec.dim))
        features = means[-1][leaves] + spec.spread * noise
        labels = leaf_paths[leaves].copy()

        train_idx, val_idx = splitIndices(len(features), spec.val_fraction,
                                          spec.seed)
        embeds = classMeanEmbeddings(features, labels, self.taxonomy.sizes,
                                     idx=train_idx, fallback=means)
        logger.debug("Generated %d samples over %d leaves",
                     len(features), num_leaves)
        return HierDataset(self.taxonomy, features, labels, embeds,
                           train_idx, val_idx)

    def nodeMeans(self):
        """Per-level (C_l, dim) generative means"""
        spec = self.spec
        tax = self.taxonomy
        means = [self.rng.standard_normal((tax.sizes[0], spec.dim))]
        for level in range(2, tax.numLevels + 1):
            parents = tax.parentMap(level)
            offsets = self.rng.standard_normal((tax.sizes[level - 1],
                                                spec.dim))
            means.append(means[-1][parents] + spec.signal * offsets)
        return means


def generateSynthetic(spec):
    """Taxonomy, features, labels, split, and class embeddings from a spec

    Arguments:
        spec {SynthSpec} -- generation parameters

    Returns:
        HierDataset -- identical for identical specs
    """
    return SyntheticGenerator(spec).generate()
