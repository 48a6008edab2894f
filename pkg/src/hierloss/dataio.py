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
Feature datasets, class embeddings, prediction files, and embedding dumps

File layouts are documented in docs/formats.md. CSV and NPZ variants
are told apart by file extension.
"""

import io
import os
import re
import logging

import numpy as np
import pandas as pd

from .metrics import PredictionSet
from .utils import HierlossError

__all__ = [
    "DataFormatError", "HierDataset", "checkLabels", "splitIndices",
    "classMeanEmbeddings",
    "loadFeatures", "saveFeatures", "loadClassEmbeddings",
    "saveClassEmbeddings", "loadDataset", "loadPredictions",
    "savePredictions", "dumpEmbeddings"
]

logger = logging.getLogger(__name__)

FEATURES_TAG = "hierloss-features"
EMBEDDINGS_TAG = "hierloss-class-embeddings"


class DataFormatError(HierlossError):
    """
    Thrown on unreadable or inconsistent data files
    """
    pass


class HierDataset(object):
    """Frozen image features with label paths and class embeddings

    Attributes:
        taxonomy {Taxonomy} -- label tree
        features {array} -- (N, k) features
        labels {array} -- (N, L) ground-truth ids, valid tree paths
        class_embeds {list} -- per-level (C_l, d) class embeddings
        train_idx, val_idx {array} -- sorted split indices
    """

    def __init__(self, taxonomy, features, labels, class_embeds,
                 train_idx=None, val_idx=None):
        self.taxonomy = taxonomy
        self.features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        self.labels = np.atleast_2d(np.asarray(labels, dtype=np.int64))
        self.class_embeds = [np.atleast_2d(np.asarray(e, dtype=np.float64))
                             for e in class_embeds]
        self.train_idx = None if train_idx is None else \
            np.asarray(train_idx, dtype=np.int64)
        self.val_idx = None if val_idx is None else \
            np.asarray(val_idx, dtype=np.int64)
        self._validate()

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def embedDim(self):
        return self.class_embeds[0].shape[1]

    def ensureSplit(self, val_fraction, seed):
        """Create the seeded train/validation split if none is set"""
        if self.train_idx is None or self.val_idx is None:
            self.train_idx, self.val_idx = splitIndices(
                len(self), val_fraction, seed)
        return self.train_idx, self.val_idx

    def header(self):
        return {"N": len(self), "dim": self.dim,
                "L": self.taxonomy.numLevels,
                "C": list(self.taxonomy.sizes)}

    def _validate(self):
        tax = self.taxonomy
        count = self.features.shape[0]
        if not count:
            raise DataFormatError("Dataset has no samples")
        if not np.all(np.isfinite(self.features)):
            raise DataFormatError("Features contain non-finite entries")
        if self.labels.shape != (count, tax.numLevels):
            raise DataFormatError(
                "Label table has shape {}, expected ({}, {})".format(
                    self.labels.shape, count, tax.numLevels))
        checkLabels(tax, self.labels)
        if len(self.class_embeds) != tax.numLevels:
            raise DataFormatError("Need one class-embedding matrix per level")
        dims = set(e.shape[1] for e in self.class_embeds)
        if len(dims) != 1:
            raise DataFormatError("Class embeddings differ in width")
        for idx, (emb, size) in enumerate(zip(self.class_embeds, tax.sizes)):
            if emb.shape[0] != size:
                raise DataFormatError(
                    "Level {} has {} embeddings for {} classes".format(
                        idx + 1, emb.shape[0], size))
            if not np.all(np.isfinite(emb)):
                raise DataFormatError("Class embeddings are not finite")


def checkLabels(taxonomy, labels):
    """Raise DataFormatError unless every row is a valid root-to-leaf path"""
    if not labels.shape[0]:
        raise DataFormatError("Dataset has no samples")
    for idx, size in enumerate(taxonomy.sizes):
        col = labels[:, idx]
        if col.min() < 0 or col.max() >= size:
            raise DataFormatError(
                "Label id out of range at level {}".format(idx + 1))
    if not np.all(taxonomy.validLinks(labels)):
        raise DataFormatError("Label table contains invalid tree paths")


def splitIndices(count, val_fraction, seed):
    """Seeded train/validation split, both halves sorted

    At least one sample stays on each side when count >= 2.
    """
    if not 0.0 <= val_fraction < 1.0:
        raise DataFormatError("Validation fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(count)
    n_val = int(round(count * val_fraction))
    if count >= 2 and val_fraction > 0:
        n_val = min(max(n_val, 1), count - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def classMeanEmbeddings(features, labels, sizes, idx=None, fallback=None):
    """Per-level class embeddings as means of the member features

    Arguments:
        features {array} -- (N, d)
        labels {array} -- (N, L)
        sizes {sequence} -- C_l per level

    Keyword Arguments:
        idx {array} -- rows to average over, all rows if None
        fallback {list} -- per-level (C_l, d) rows used for classes without
                           members (default: {None}, which raises)

    Returns:
        list -- per-level (C_l, d) arrays
    """
    if idx is not None:
        features, labels = features[idx], labels[idx]
    embeds = []
    for level, size in enumerate(sizes):
        sums = np.zeros((size, features.shape[1]))
        np.add.at(sums, labels[:, level], features)
        counts = np.bincount(labels[:, level], minlength=size)
        empty = counts == 0
        if np.any(empty):
            if fallback is None:
                raise DataFormatError(
                    "Level {} has classes without samples".format(level + 1))
            sums[empty] = fallback[level][empty]
            counts = np.where(empty, 1, counts)
        embeds.append(sums / counts[:, None])
    return embeds


# Feature files
######################################################################

def _isNpz(path):
    return str(path).lower().endswith(".npz")


def _parseTagLine(line, tag):
    parts = line.lstrip("#").split()
    if not parts or parts[0] != tag:
        raise DataFormatError("Missing '# {}' header line".format(tag))
    header = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        header[key] = value
    try:
        sizes = [int(v) for v in header.get("C", "").split(",") if v]
        return {k: int(v) for k, v in header.items() if k != "C"}, sizes
    except ValueError:
        raise DataFormatError("Malformed header line: " + line.strip())


def _readHeaderLine(path):
    try:
        with io.open(path, encoding="utf-8") as f:
            return f.readline()
    except (IOError, OSError) as e:
        raise DataFormatError("Data file could not be read: " + str(e))


def _readFrame(path, what, **kwargs):
    try:
        return pd.read_csv(path, float_precision="round_trip", **kwargs)
    except (IOError, OSError, ValueError) as e:
        raise DataFormatError(
            "{} could not be read: {}".format(what, e))


def _indexedColumns(frame, prefix):
    """Columns named <prefix><int>, ordered by the integer"""
    pattern = re.compile(r"^{}(\d+)$".format(re.escape(prefix)))
    found = []
    for col in frame.columns:
        match = pattern.match(str(col))
        if match:
            found.append((int(match.group(1)), col))
    return [col for _, col in sorted(found)]


def _columnsAs(frame, cols, dtype, what):
    block = frame[cols]
    if block.isna().any().any():
        raise DataFormatError("{} contain empty cells".format(what))
    try:
        values = block.to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DataFormatError("{} are not numeric: {}".format(what, e))
    if dtype is np.int64:
        if not np.all(np.isfinite(values)) or \
                np.any(values != np.round(values)):
            raise DataFormatError("{} must be integers".format(what))
        values = values.astype(np.int64)
    return values


def loadFeatures(path):
    """Read an N x dim feature matrix with its N x L label table

    Returns:
        tuple -- (features, labels, header dict with N, dim, L, C)
    """
    if _isNpz(path):
        try:
            with np.load(path) as data:
                features = data["features"].astype(np.float64)
                labels = data["labels"].astype(np.int64)
                raw = [int(v) for v in data["header"]]
        except (IOError, OSError, KeyError, ValueError) as e:
            raise DataFormatError("Feature file could not be read: " + str(e))
        header = {"N": raw[0], "dim": raw[1], "L": raw[2], "C": raw[3:]}
    else:
        values, sizes = _parseTagLine(_readHeaderLine(path), FEATURES_TAG)
        header = dict(values, C=sizes)
        frame = _readFrame(path, "Feature file", comment="#")
        features = _columnsAs(frame, _indexedColumns(frame, "f"),
                              np.float64, "Feature columns")
        labels = _columnsAs(frame, _indexedColumns(frame, "y"),
                            np.int64, "Label columns")

    if features.shape != (header.get("N"), header.get("dim")) or \
            labels.shape != (header.get("N"), header.get("L")) or \
            len(header["C"]) != header.get("L"):
        raise DataFormatError(
            "Feature file contents do not match its header {}".format(header))
    return features, labels, header


def saveFeatures(path, features, labels, sizes):
    """Write features + labels in the CSV or NPZ layout"""
    count, dim = features.shape
    num = labels.shape[1]
    if _isNpz(path):
        header = np.array([count, dim, num] + list(sizes), dtype=np.int64)
        np.savez(path, features=features, labels=labels, header=header)
        return
    frame = pd.DataFrame(features, columns=["f{}".format(i)
                                            for i in range(dim)])
    for level in range(num):
        frame["y{}".format(level + 1)] = labels[:, level]
    with io.open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# {} N={} dim={} L={} C={}\n".format(
            FEATURES_TAG, count, dim, num, ",".join(str(s) for s in sizes)))
        frame.to_csv(f, index=False, float_format="%.17g")


# Class embedding files
######################################################################

def loadClassEmbeddings(path, sizes=None):
    """Read per-level C_l x dim class embeddings"""
    if _isNpz(path):
        try:
            with np.load(path) as data:
                keys = sorted((k for k in data.files if k.startswith("level")),
                              key=lambda k: int(k[len("level"):]))
                embeds = [data[k].astype(np.float64) for k in keys]
        except (IOError, OSError, KeyError, ValueError) as e:
            raise DataFormatError(
                "Class-embedding file could not be read: " + str(e))
    else:
        _, file_sizes = _parseTagLine(_readHeaderLine(path), EMBEDDINGS_TAG)
        frame = _readFrame(path, "Class-embedding file", comment="#")
        if "level" not in frame or "class_id" not in frame:
            raise DataFormatError(
                "Class-embedding file needs level and class_id columns")
        ids = _columnsAs(frame, ["level", "class_id"], np.int64,
                         "Class-embedding ids")
        values = _columnsAs(frame, _indexedColumns(frame, "e"), np.float64,
                            "Class-embedding columns")
        embeds = []
        for level, size in enumerate(file_sizes, start=1):
            rows = np.flatnonzero(ids[:, 0] == level)
            rows = rows[np.argsort(ids[rows, 1], kind="stable")]
            if list(ids[rows, 1]) != list(range(size)):
                raise DataFormatError(
                    "Level {} embeddings must cover ids 0..{}".format(
                        level, size - 1))
            embeds.append(values[rows])
    if sizes is not None and \
            tuple(e.shape[0] for e in embeds) != tuple(sizes):
        raise DataFormatError("Class embeddings do not match the taxonomy")
    return embeds


def saveClassEmbeddings(path, embeds):
    if _isNpz(path):
        np.savez(path, **{"level{}".format(i + 1): e
                          for i, e in enumerate(embeds)})
        return
    dim = embeds[0].shape[1]
    frames = []
    for level, emb in enumerate(embeds, start=1):
        frame = pd.DataFrame(emb, columns=["e{}".format(i)
                                           for i in range(dim)])
        frame.insert(0, "class_id", np.arange(emb.shape[0]))
        frame.insert(0, "level", level)
        frames.append(frame)
    with io.open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# {} L={} dim={} C={}\n".format(
            EMBEDDINGS_TAG, len(embeds), dim,
            ",".join(str(e.shape[0]) for e in embeds)))
        pd.concat(frames).to_csv(f, index=False, float_format="%.17g")


def loadDataset(taxonomy, features_path, embeddings_path=None,
                val_fraction=0.2, seed=0):
    """Assemble a HierDataset from files

    Without an embeddings file the class embeddings are the per-class
    means of the training split's features.
    """
    features, labels, header = loadFeatures(features_path)
    if tuple(header["C"]) != taxonomy.sizes:
        raise DataFormatError(
            "Feature header sizes {} differ from taxonomy {}".format(
                header["C"], taxonomy.sizes))
    checkLabels(taxonomy, labels)
    train_idx, val_idx = splitIndices(len(features), val_fraction, seed)
    if embeddings_path:
        embeds = loadClassEmbeddings(embeddings_path, taxonomy.sizes)
    else:
        embeds = classMeanEmbeddings(features, labels, taxonomy.sizes,
                                     idx=train_idx)
    logger.info("Loaded %d samples (dim %d) from %s", len(features),
                features.shape[1], os.path.basename(str(features_path)))
    return HierDataset(taxonomy, features, labels, embeds,
                       train_idx, val_idx)


# Predictions and dumps
######################################################################

def loadPredictions(path):
    """Read a prediction CSV into a PredictionSet"""
    frame = _readFrame(path, "Prediction file")
    pcols = _indexedColumns(frame, "pred_")
    tcols = _indexedColumns(frame, "true_")
    expected = (["pred_{}".format(i + 1) for i in range(len(pcols))] +
                ["true_{}".format(i + 1) for i in range(len(pcols))])
    stray = [c for c in frame.columns
             if str(c).startswith(("pred_", "true_")) and c not in expected]
    if not pcols or pcols + tcols != expected or stray or \
            "sample_id" not in frame:
        raise DataFormatError(
            "Prediction file needs sample_id, pred_1..pred_L, true_1..true_L")
    return PredictionSet(_columnsAs(frame, pcols, np.int64, "Predictions"),
                         _columnsAs(frame, tcols, np.int64, "True labels"),
                         frame["sample_id"].to_numpy())


def savePredictions(path, preds):
    num = preds.numLevels
    frame = pd.DataFrame({"sample_id": preds.sample_ids})
    for level in range(num):
        frame["pred_{}".format(level + 1)] = preds.preds[:, level]
    for level in range(num):
        frame["true_{}".format(level + 1)] = preds.truths[:, level]
    frame.to_csv(path, index=False)


def dumpEmbeddings(path, features, labels, class_embeds, sample_ids=None):
    """Write sample features and class embeddings to one CSV

    Rows with kind == "sample" carry the label path, rows with
    kind == "class" carry their level and class id.
    """
    dim = features.shape[1]
    cols = ["e{}".format(i) for i in range(dim)]
    if sample_ids is None:
        sample_ids = np.arange(features.shape[0])
    samples = pd.DataFrame(features, columns=cols)
    samples.insert(0, "path", ["/".join(str(v) for v in row)
                               for row in labels])
    samples.insert(0, "id", sample_ids)
    samples.insert(0, "level", 0)
    samples.insert(0, "kind", "sample")
    frames = [samples]
    for level, emb in enumerate(class_embeds, start=1):
        block = pd.DataFrame(emb, columns=cols)
        block.insert(0, "path", "")
        block.insert(0, "id", np.arange(emb.shape[0]))
        block.insert(0, "level", level)
        block.insert(0, "kind", "class")
        frames.append(block)
    pd.concat(frames, ignore_index=True).to_csv(
        path, index=False, float_format="%.17g")
