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
Parameter update rules for the adapter factors
"""

import numpy as np

from .consts import OPTIMIZERS
from .utils import HierlossError

__all__ = ["SGD", "AdamW", "makeOptimizer"]


class SGD(object):
    """Plain gradient descent with optional decoupled weight decay"""

    def __init__(self, lr, weight_decay=0.0):
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)

    def step(self, params, grads):
        """Update every array in `params` in place"""
        for name in sorted(params):
            param = params[name]
            if self.weight_decay:
                param -= self.lr * self.weight_decay * param
            param -= self.lr * grads[name]


class AdamW(object):
    """Adam with bias-corrected moments and decoupled weight decay"""

    def __init__(self, lr, weight_decay=0.01, betas=(0.9, 0.999), eps=1e-8):
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.steps = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        """Update every array in `params` in place"""
        self.steps += 1
        corr1 = 1.0 - self.beta1 ** self.steps
        corr2 = 1.0 - self.beta2 ** self.steps
        for name in sorted(params):
            param, grad = params[name], grads[name]
            m = self._m.setdefault(name, np.zeros_like(param))
            v = self._v.setdefault(name, np.zeros_like(param))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            if self.weight_decay:
                param -= self.lr * self.weight_decay * param
            param -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


def makeOptimizer(name, lr, weight_decay):
    if name == "adamw":
        return AdamW(lr, weight_decay=weight_decay)
    elif name == "sgd":
        return SGD(lr, weight_decay=weight_decay)
    raise HierlossError("Unknown optimizer {!r}, expected one of {}".format(
        name, OPTIMIZERS))
