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
Multi-level label taxonomies: loading, validation, and tree queries

Levels are numbered from 1 (coarsest) to L (finest). Classes carry a
dense integer id per level, assigned in file order, and every class below
level 1 has exactly one parent on the level above. Level-1 classes hang
off an implicit root, which makes them mutual siblings.
"""

import io
import json
import logging
from functools import reduce
from operator import mul

import numpy as np

from .utils import HierlossError

__all__ = [
    "TaxonomyError", "Level", "Taxonomy",
    "parseTaxonomy", "loadTaxonomy", "loadsTaxonomy", "dumpTaxonomy",
    "balancedTaxonomy"
]

logger = logging.getLogger(__name__)


class TaxonomyError(HierlossError):
    """
    Thrown on malformed taxonomy documents and out-of-range queries
    """
    pass


def _classId(value):
    """Integral class id as int; bools and fractional numbers are rejected"""
    if isinstance(value, (bool, np.bool_)):
        raise TaxonomyError("Class id must be an integer, got {!r}".format(
            value))
    if isinstance(value, (int, np.integer)):
        return int(value)
    try:
        as_int = int(value)
    except (TypeError, ValueError, OverflowError):
        as_int = None
    if as_int is None or as_int != value:
        raise TaxonomyError("Class id must be an integer, got {!r}".format(
            value))
    return as_int


class Level(object):
    """One stratum of the hierarchy: class names plus parent ids"""

    def __init__(self, name, classes, parents=None):
        self.name = name
        self.classes = tuple(classes)
        if parents is None:
            self.parents = None
        else:
            parents = np.asarray(parents, dtype=np.int64)
            parents.flags.writeable = False
            self.parents = parents
        self._index = {cname: idx for idx, cname in enumerate(self.classes)}

    def __len__(self):
        return len(self.classes)

    def __repr__(self):
        return "Level({!r}, {} classes)".format(self.name, len(self))

    def classId(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise TaxonomyError(
                "Unknown class '{}' at level '{}'".format(name, self.name))


class Taxonomy(object):
    """Immutable L-level label tree

    All derived indexes (children lists, sibling sets, leaf ancestor
    chains) are built eagerly in the constructor, so instances can be
    shared between workers without synchronization.
    """

    def __init__(self, levels):
        """
        Arguments:
            levels {list} -- Level objects ordered coarse -> fine. The
                             first level must not have parents, all
                             others must.

        Raises:
            TaxonomyError -- on structural violations
        """
        if not levels:
            raise TaxonomyError("Taxonomy needs at least one level")
        self._levels = tuple(levels)
        self._validate()
        self._children = self._buildChildren()
        self._siblings = self._buildSiblings()
        self._leaf_paths = self._buildLeafPaths()

    # Structure
    ######################################################################

    @property
    def numLevels(self):
        """L, the number of levels"""
        return len(self._levels)

    @property
    def sizes(self):
        """(C_1, ..., C_L)"""
        return tuple(len(level) for level in self._levels)

    @property
    def levelNames(self):
        return tuple(level.name for level in self._levels)

    def level(self, level):
        """Level object for a 1-based level number"""
        self._checkLevel(level)
        return self._levels[level - 1]

    def className(self, level, class_id):
        self._checkClass(level, class_id)
        return self._levels[level - 1].classes[class_id]

    def classId(self, level, name):
        return self.level(level).classId(name)

    def parentOf(self, level, class_id):
        """Parent id on level-1, or None for level-1 classes"""
        self._checkClass(level, class_id)
        if level == 1:
            return None
        return int(self._levels[level - 1].parents[class_id])

    def parentMap(self, level):
        """Array mapping each class id at `level` (>= 2) to its parent id"""
        self._checkLevel(level)
        if level == 1:
            raise TaxonomyError("Level 1 has no parent map")
        return self._levels[level - 1].parents

    def children(self, level, class_id):
        """Ids on level+1 whose parent is `class_id`"""
        self._checkClass(level, class_id)
        if level == self.numLevels:
            return ()
        return self._children[level - 1][class_id]

    # Queries
    ######################################################################

    def siblings(self, level, class_id):
        """Classes sharing the parent of `class_id`, excluding itself

        Arguments:
            level {int} -- 1-based level number
            class_id {int} -- dense class id at that level

        Returns:
            frozenset -- sibling ids (empty for only children)
        """
        self._checkClass(level, class_id)
        return self._siblings[level - 1][class_id]

    def checkPath(self, path):
        """Validate length and per-level id ranges of a label path

        Returns:
            tuple -- the path as a tuple of ints

        Raises:
            TaxonomyError -- wrong length or id out of range
        """
        path = tuple(_classId(cid) for cid in path)
        if len(path) != self.numLevels:
            raise TaxonomyError(
                "Label path has {} entries, taxonomy has {} levels".format(
                    len(path), self.numLevels))
        for level, cid in enumerate(path, start=1):
            self._checkClass(level, cid)
        return path

    def isValidPath(self, path):
        """Whether consecutive path entries are parent/child pairs"""
        path = self.checkPath(path)
        for level in range(2, self.numLevels + 1):
            if self._levels[level - 1].parents[path[level - 1]] != \
                    path[level - 2]:
                return False
        return True

    def ancestorPath(self, leaf_id):
        """Unique root-to-leaf path ending at a finest-level class"""
        self._checkClass(self.numLevels, leaf_id)
        return tuple(int(cid) for cid in self._leaf_paths[leaf_id])

    def leafPaths(self):
        """Read-only (C_L, L) array; row i is ancestorPath(i)"""
        return self._leaf_paths

    def validLinks(self, paths):
        """Per-link validity of many paths at once

        Arguments:
            paths {array} -- (N, L) integer array of in-range ids

        Returns:
            array -- (N, L-1) boolean array, column l-2 tells whether the
                     (l-1, l) pair is a parent/child edge
        """
        paths = np.asarray(paths, dtype=np.int64)
        cols = [self._levels[level - 1].parents[paths[:, level - 1]] ==
                paths[:, level - 2]
                for level in range(2, self.numLevels + 1)]
        if not cols:
            return np.ones((paths.shape[0], 0), dtype=bool)
        return np.stack(cols, axis=1)

    # Serialization
    ######################################################################

    def toDict(self):
        """Document in the taxonomy file format"""
        levels = []
        for idx, level in enumerate(self._levels):
            classes = []
            for cid, cname in enumerate(level.classes):
                entry = {"name": cname}
                if idx > 0:
                    prev = self._levels[idx - 1]
                    entry["parent"] = prev.classes[level.parents[cid]]
                classes.append(entry)
            levels.append({"name": level.name, "classes": classes})
        return {"levels": levels}

    def __eq__(self, other):
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return self.toDict() == other.toDict()

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        return "Taxonomy(L={}, C={})".format(self.numLevels, self.sizes)

    # General helper methods
    ######################################################################

    def _checkLevel(self, level):
        if not isinstance(level, (int, np.integer)) or \
                not 1 <= level <= self.numLevels:
            raise TaxonomyError("Level out of range: {!r}".format(level))

    def _checkClass(self, level, class_id):
        self._checkLevel(level)
        size = len(self._levels[level - 1])
        if isinstance(class_id, (bool, np.bool_)) or \
                not isinstance(class_id, (int, np.integer)) or \
                not 0 <= class_id < size:
            raise TaxonomyError(
                "Class id {!r} out of range for level {} (size {})".format(
                    class_id, level, size))

    def _validate(self):
        for idx, level in enumerate(self._levels):
            if not len(level):
                raise TaxonomyError(
                    "Empty level: '{}'".format(level.name))
            if len(set(level.classes)) != len(level.classes):
                raise TaxonomyError(
                    "Duplicate class name in level '{}'".format(level.name))
            if idx == 0:
                if level.parents is not None:
                    raise TaxonomyError("Level 1 classes cannot have parents")
                continue
            if level.parents is None or \
                    level.parents.shape != (len(level),):
                raise TaxonomyError(
                    "Level '{}' needs one parent per class".format(
                        level.name))
            prev_size = len(self._levels[idx - 1])
            if level.parents.size and (level.parents.min() < 0 or
                                       level.parents.max() >= prev_size):
                raise TaxonomyError(
                    "Orphan class in level '{}': parent id out of "
                    "range".format(level.name))

    def _buildChildren(self):
        children = []
        for idx in range(len(self._levels) - 1):
            lists = [[] for _ in range(len(self._levels[idx]))]
            for cid, parent in enumerate(self._levels[idx + 1].parents):
                lists[parent].append(cid)
            children.append(tuple(tuple(items) for items in lists))
        return tuple(children)

    def _buildSiblings(self):
        # level 1: everything under the implicit root
        first = range(len(self._levels[0]))
        siblings = [tuple(frozenset(j for j in first if j != i)
                          for i in first)]
        for idx in range(1, len(self._levels)):
            level = self._levels[idx]
            groups = self._children[idx - 1]
            siblings.append(tuple(
                frozenset(j for j in groups[level.parents[i]] if j != i)
                for i in range(len(level))))
        return tuple(siblings)

    def _buildLeafPaths(self):
        num = self.numLevels
        leaf = self._levels[-1]
        paths = np.empty((len(leaf), num), dtype=np.int64)
        paths[:, num - 1] = np.arange(len(leaf))
        for idx in range(num - 1, 0, -1):
            paths[:, idx - 1] = self._levels[idx].parents[paths[:, idx]]
        paths.flags.writeable = False
        return paths


# Taxonomy documents
######################################################################

def parseTaxonomy(doc):
    """Build a Taxonomy from a parsed taxonomy document

    Expected layout:
        {"levels": [{"name": str,
                     "classes": [{"name": str, "parent": str}, ...]},
                    ...]}

    "parent" is required on every level after the first and must name a
    class of the previous level.

    Arguments:
        doc {dict} -- parsed document

    Raises:
        TaxonomyError -- duplicate names, orphans, multiple parents, empty
                         levels, or a malformed document

    Returns:
        Taxonomy -- validated taxonomy
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("levels"), list):
        raise TaxonomyError("Taxonomy document needs a 'levels' list")
    if not doc["levels"]:
        raise TaxonomyError("Taxonomy document has no levels")

    levels = []
    for idx, entry in enumerate(doc["levels"]):
        if not isinstance(entry, dict):
            raise TaxonomyError("Level entry {} is not an object".format(idx))
        lname = str(entry.get("name") or "level{}".format(idx + 1))
        classes = entry.get("classes")
        if not isinstance(classes, list) or not classes:
            raise TaxonomyError("Empty level: '{}'".format(lname))

        names = []
        parents = []
        seen = set()
        for item in classes:
            if not isinstance(item, dict) or \
                    not isinstance(item.get("name"), str) or \
                    not item["name"]:
                raise TaxonomyError(
                    "Classes in level '{}' need a non-empty 'name'".format(
                        lname))
            cname = item["name"]
            if cname in seen:
                raise TaxonomyError(
                    "Duplicate class name '{}' in level '{}'".format(
                        cname, lname))
            seen.add(cname)
            names.append(cname)

            parent = item.get("parent")
            if idx == 0:
                if parent is not None:
                    raise TaxonomyError(
                        "Class '{}' on the first level cannot have a parent "
                        "(cycle above the root)".format(cname))
                continue
            if parent is None:
                raise TaxonomyError(
                    "Orphan class '{}' in level '{}': no parent "
                    "given".format(cname, lname))
            if isinstance(parent, (list, tuple)):
                raise TaxonomyError(
                    "Class '{}' in level '{}' has multiple parents".format(
                        cname, lname))
            prev = levels[idx - 1]
            try:
                parents.append(prev.classId(str(parent)))
            except TaxonomyError:
                raise TaxonomyError(
                    "Orphan class '{}' in level '{}': parent '{}' does not "
                    "exist in level '{}'".format(
                        cname, lname, parent, prev.name))

        levels.append(Level(lname, names, parents if idx else None))

    taxonomy = Taxonomy(levels)
    logger.debug("Parsed %r", taxonomy)
    return taxonomy


def loadsTaxonomy(text):
    """Parse a taxonomy from JSON text"""
    try:
        doc = json.loads(text)
    except ValueError as e:
        raise TaxonomyError("Taxonomy file is not valid JSON: " + str(e))
    return parseTaxonomy(doc)


def loadTaxonomy(path):
    """Read and validate a taxonomy file (UTF-8 JSON)"""
    try:
        with io.open(path, encoding="utf-8") as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise TaxonomyError("Taxonomy file could not be read: " + str(e))
    return loadsTaxonomy(text)


def dumpTaxonomy(taxonomy, path):
    """Write a taxonomy file that loadTaxonomy reads back unchanged"""
    with io.open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(taxonomy.toDict(), indent=2,
                           ensure_ascii=False) + "\n")


def balancedTaxonomy(branching, level_names=None):
    """Balanced tree from per-level branching factors

    Level l holds prod(branching[:l]) classes and class j on level l > 1
    has parent j // branching[l-1], so ids enumerate the tree breadth
    first. Branching (2, 2, 2) gives sizes (2, 4, 8) and leaf 7 the path
    (1, 3, 7).

    Arguments:
        branching {sequence} -- branching factor per level, each >= 1

    Keyword Arguments:
        level_names {sequence} -- optional level names (default: {None})

    Returns:
        Taxonomy -- balanced taxonomy
    """
    branching = [int(b) for b in branching]
    if not branching or min(branching) < 1:
        raise TaxonomyError(
            "Branching factors must be >= 1: {!r}".format(branching))
    levels = []
    for idx, factor in enumerate(branching):
        size = reduce(mul, branching[:idx + 1], 1)
        lname = (level_names[idx] if level_names
                 else "level{}".format(idx + 1))
        names = ["l{}c{}".format(idx + 1, j) for j in range(size)]
        parents = None
        if idx:
            parents = np.arange(size, dtype=np.int64) // factor
        levels.append(Level(lname, names, parents))
    return Taxonomy(levels)
