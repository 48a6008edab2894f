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
Similarity logits in a frozen embedding space and the low-rank adapter

Image features pass through an adapter W = W0 + (alpha/r) B A before they
are compared with fixed class embeddings by cosine similarity. Only A and
B are trainable; W0 stays frozen.
"""

import logging

import numpy as np

from .consts import DEFAULT_TAU
from .utils import HierlossError

__all__ = [
    "EmbeddingError", "AdapterState", "HierLogits",
    "initAdapter", "cosineLogits", "cosineLogitsBatch", "cosineBackward",
    "normalizeRows", "adapterForward", "adapterForwardBatch",
    "adapterGrad", "adapterGradBatch", "saveAdapter", "loadAdapter"
]

logger = logging.getLogger(__name__)


class EmbeddingError(HierlossError):
    """
    Thrown on zero-norm vectors, non-finite entries, or shape mismatches
    """
    pass


class AdapterState(object):
    """Frozen base weight plus trainable low-rank factors

    Attributes:
        W0 {array} -- frozen (d, k) base matrix
        A {array} -- trainable (r, k) factor
        B {array} -- trainable (d, r) factor
        alpha {float} -- scaling numerator, the update is (alpha/r) B A
    """

    def __init__(self, W0, A, B, alpha):
        self.W0 = np.asarray(W0, dtype=np.float64)
        self.A = np.asarray(A, dtype=np.float64)
        self.B = np.asarray(B, dtype=np.float64)
        self.alpha = float(alpha)
        if self.W0.ndim != 2:
            raise EmbeddingError(
                "Adapter base must be a matrix, got shape {}".format(
                    self.W0.shape))
        d, k = self.W0.shape
        if self.A.ndim != 2 or self.A.shape[1] != k or \
                self.B.shape != (d, self.A.shape[0]):
            raise EmbeddingError(
                "Adapter shapes do not fit: W0 {}, A {}, B {}".format(
                    self.W0.shape, self.A.shape, self.B.shape))
        if self.rank < 1 or self.alpha <= 0:
            raise EmbeddingError("Adapter needs rank >= 1 and alpha > 0")

    @property
    def rank(self):
        return self.A.shape[0]

    @property
    def dimIn(self):
        return self.W0.shape[1]

    @property
    def dimOut(self):
        return self.W0.shape[0]

    @property
    def scaling(self):
        return self.alpha / self.rank

    @property
    def numTrainable(self):
        """r * (d + k)"""
        return self.rank * (self.dimOut + self.dimIn)

    def effectiveWeight(self):
        return self.W0 + self.scaling * self.B.dot(self.A)

    def copy(self):
        return AdapterState(self.W0.copy(), self.A.copy(), self.B.copy(),
                            self.alpha)

    def params(self):
        """Trainable parameters by name, as live references"""
        return {"A": self.A, "B": self.B}


class HierLogits(object):
    """Per-level raw scores of one sample, coarse -> fine, plus tau"""

    def __init__(self, levels, tau=DEFAULT_TAU):
        self.levels = tuple(np.asarray(z, dtype=np.float64).ravel()
                            for z in levels)
        self.tau = float(tau)
        if not self.levels:
            raise EmbeddingError("HierLogits needs at least one level")
        if not self.tau > 0:
            raise EmbeddingError("Temperature must be positive")
        for z in self.levels:
            if not z.size:
                raise EmbeddingError("Empty logit vector")
            if not np.all(np.isfinite(z)):
                raise EmbeddingError("Non-finite logits")

    def __len__(self):
        return len(self.levels)

    @property
    def sizes(self):
        return tuple(z.size for z in self.levels)


def initAdapter(dim_in, rank, alpha, rng, dim_out=None, base="identity"):
    """Fresh adapter whose update starts at zero

    A is drawn from U(-1/sqrt(k), 1/sqrt(k)), B is zero, so the adapted
    features equal W0 x until training moves B.

    Arguments:
        dim_in {int} -- k, input feature dimension
        rank {int} -- r
        alpha {float} -- scaling numerator
        rng {Generator} -- numpy random generator

    Keyword Arguments:
        dim_out {int} -- d, defaults to dim_in (default: {None})
        base {str} -- "identity" (requires d == k) or "random" orthonormal
                      projection (default: {"identity"})

    Returns:
        AdapterState -- new adapter
    """
    dim_out = dim_in if dim_out is None else dim_out
    if base == "identity":
        if dim_out != dim_in:
            raise EmbeddingError("Identity base needs dim_out == dim_in")
        W0 = np.eye(dim_in)
    elif base == "random":
        gauss = rng.standard_normal((max(dim_out, dim_in),
                                     min(dim_out, dim_in)))
        q, _ = np.linalg.qr(gauss)
        W0 = q if dim_out >= dim_in else q.T
    else:
        raise EmbeddingError("Unknown adapter base: {!r}".format(base))
    bound = 1.0 / np.sqrt(dim_in)
    A = rng.uniform(-bound, bound, size=(rank, dim_in))
    B = np.zeros((dim_out, rank))
    return AdapterState(W0, A, B, alpha)


# Cosine similarity logits
######################################################################

def normalizeRows(matrix, what="class embedding"):
    """Unit-normalize rows, rejecting zero or non-finite rows"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if not np.all(np.isfinite(matrix)):
        raise EmbeddingError("Non-finite {} entries".format(what))
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        raise EmbeddingError("Zero-norm {} row".format(what))
    return matrix / norms[:, None]


def cosineLogits(image_vec, class_embeds):
    """Cosine similarity of one feature vector with every class embedding

    Arguments:
        image_vec {array} -- (dim,) feature vector, nonzero
        class_embeds {array} -- (C, dim) class embeddings, nonzero rows

    Returns:
        array -- (C,) similarities in [-1, 1]
    """
    image_vec = np.asarray(image_vec, dtype=np.float64).ravel()
    class_embeds = np.atleast_2d(np.asarray(class_embeds, dtype=np.float64))
    if class_embeds.shape[1] != image_vec.size:
        raise EmbeddingError(
            "Dimension mismatch: vector {} vs embeddings {}".format(
                image_vec.size, class_embeds.shape[1]))
    v = normalizeRows(image_vec[None, :], "image vector")[0]
    t = normalizeRows(class_embeds)
    return np.clip(t.dot(v), -1.0, 1.0)


def cosineLogitsBatch(features, unit_embeds):
    """Cosine logits for many samples against pre-normalized embeddings

    Arguments:
        features {array} -- (N, d) adapted features, nonzero rows
        unit_embeds {array} -- (C, d) unit-norm class embeddings

    Returns:
        tuple -- (Z, unit_features, norms): (N, C) similarities plus the
                 normalized features and their norms for the backward pass
    """
    if features.shape[1] != unit_embeds.shape[1]:
        raise EmbeddingError(
            "Dimension mismatch: features {} vs embeddings {}".format(
                features.shape[1], unit_embeds.shape[1]))
    norms = np.linalg.norm(features, axis=1)
    if np.any(norms == 0):
        raise EmbeddingError("Zero-norm image vector")
    unit = features / norms[:, None]
    return unit.dot(unit_embeds.T), unit, norms


def cosineBackward(upstream, Z, unit_features, norms, unit_embeds):
    """Gradient of a loss w.r.t. the features, given dLoss/dZ

    With h the feature, t_c the unit embeddings and z_c = h.t_c / |h|:
        dz_c/dh = (t_c - z_c h/|h|) / |h|

    Returns:
        array -- (N, d) gradient
    """
    proj = upstream.dot(unit_embeds)
    radial = np.sum(upstream * Z, axis=1)[:, None] * unit_features
    return (proj - radial) / norms[:, None]


# Low-rank adapter
######################################################################

def adapterForward(state, x):
    """(W0 + (alpha/r) B A) x for a single input vector"""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != state.dimIn:
        raise EmbeddingError(
            "Adapter expects input of length {}, got {}".format(
                state.dimIn, x.size))
    return state.W0.dot(x) + state.scaling * state.B.dot(state.A.dot(x))


def adapterForwardBatch(state, X):
    """Row-wise adapterForward for an (N, k) input matrix"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != state.dimIn:
        raise EmbeddingError(
            "Adapter expects inputs of width {}, got {}".format(
                state.dimIn, X.shape[1]))
    return X.dot(state.W0.T) + state.scaling * X.dot(state.A.T).dot(
        state.B.T)


def adapterGrad(state, x, upstream):
    """Gradients of A and B for one sample

    dL/dA = (alpha/r) B^T u x^T,  dL/dB = (alpha/r) u (A x)^T; W0 is frozen.

    Arguments:
        state {AdapterState} -- current adapter
        x {array} -- (k,) input
        upstream {array} -- (d,) dLoss/d(output)

    Returns:
        tuple -- (grad_A (r, k), grad_B (d, r))
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    upstream = np.asarray(upstream, dtype=np.float64).ravel()
    if x.size != state.dimIn or upstream.size != state.dimOut:
        raise EmbeddingError(
            "Adapter gradient expects x of length {} and upstream of "
            "length {}".format(state.dimIn, state.dimOut))
    scale = state.scaling
    grad_A = scale * np.outer(state.B.T.dot(upstream), x)
    grad_B = scale * np.outer(upstream, state.A.dot(x))
    return grad_A, grad_B


def adapterGradBatch(state, X, upstream):
    """Summed adapterGrad over the rows of X and upstream"""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    upstream = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if X.shape[1] != state.dimIn or upstream.shape != (X.shape[0],
                                                       state.dimOut):
        raise EmbeddingError("Adapter gradient shape mismatch")
    scale = state.scaling
    grad_A = scale * state.B.T.dot(upstream.T.dot(X))
    grad_B = scale * upstream.T.dot(X.dot(state.A.T))
    return grad_A, grad_B


def saveAdapter(state, path):
    np.savez(path, W0=state.W0, A=state.A, B=state.B,
             alpha=np.float64(state.alpha))


def loadAdapter(path):
    try:
        with np.load(path) as data:
            return AdapterState(data["W0"], data["A"], data["B"],
                                float(data["alpha"]))
    except (IOError, OSError, KeyError, ValueError) as e:
        raise EmbeddingError("Adapter file could not be read: " + str(e))
