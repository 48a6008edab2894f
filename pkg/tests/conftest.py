# -*- coding: utf-8 -*-

"""
Shared fixtures for the hierloss test suite
"""

import numpy as np
import pytest

from hierloss.generator import SynthSpec, generateSynthetic
from hierloss.taxonomy import parseTaxonomy, balancedTaxonomy


# Root with two parents: Parent1 {B, C, D}, Parent2 {F, G}
FIG_TREE_DOC = {
    "levels": [
        {"name": "parent",
         "classes": [{"name": "Parent1"}, {"name": "Parent2"}]},
        {"name": "child",
         "classes": [{"name": "B", "parent": "Parent1"},
                     {"name": "C", "parent": "Parent1"},
                     {"name": "D", "parent": "Parent1"},
                     {"name": "F", "parent": "Parent2"},
                     {"name": "G", "parent": "Parent2"}]},
    ]
}

ONLY_CHILD_DOC = {
    "levels": [
        {"name": "order", "classes": [{"name": "o1"}, {"name": "o2"}]},
        {"name": "species",
         "classes": [{"name": "s1", "parent": "o1"},
                     {"name": "s2", "parent": "o2"},
                     {"name": "s3", "parent": "o2"}]},
    ]
}

SINGLE_LEVEL_DOC = {
    "levels": [
        {"name": "species",
         "classes": [{"name": "a"}, {"name": "b"}, {"name": "c"}]},
    ]
}


@pytest.fixture
def fig_tree():
    return parseTaxonomy(FIG_TREE_DOC)


@pytest.fixture
def only_child_tree():
    return parseTaxonomy(ONLY_CHILD_DOC)


@pytest.fixture
def single_level_tree():
    return parseTaxonomy(SINGLE_LEVEL_DOC)


@pytest.fixture
def balanced_tree():
    return balancedTaxonomy((2, 2, 2))


@pytest.fixture
def all_trees(fig_tree, only_child_tree, single_level_tree, balanced_tree):
    return [fig_tree, only_child_tree, single_level_tree, balanced_tree]


@pytest.fixture
def small_data():
    return generateSynthetic(SynthSpec(branching=(2, 2), dim=6, per_leaf=5,
                                       spread=0.3, signal=0.8, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
