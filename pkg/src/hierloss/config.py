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
Handles run configuration
"""

import logging

from .libhier.configmanager import ConfigManager

from ._version import __version__
from .consts import (DEFAULT_TAU, DEFAULT_RANK, DEFAULT_ALPHA, DEFAULT_LR,
                     DEFAULT_EPSILON, DEFAULT_ARMS)
from .generator import SynthSpec
from .losses import LossWeights
from .trainer import TrainConfig, STANDARD_BENCHMARK

__all__ = ["config_defaults", "makeConfig", "trainConfigFromManager",
           "synthSpecFromManager"]

logger = logging.getLogger(__name__)

config_defaults = {
    "version": __version__,
    "seed": 0,
    # None: HIERLOSS_THREADS or a single worker
    "workers": None,
    "data": {
        "taxonomy": None,
        "features": None,
        "embeddings": None,
        "val_fraction": 0.2,
    },
    "synth": {
        "branching": list(STANDARD_BENCHMARK.branching),
        "dim": STANDARD_BENCHMARK.dim,
        "per_leaf": STANDARD_BENCHMARK.per_leaf,
        "spread": STANDARD_BENCHMARK.spread,
        "signal": STANDARD_BENCHMARK.signal,
    },
    "loss": {
        "ce": 1.0,
        "lambda1": 0.0,
        "lambda2": 0.0,
        "epsilon": DEFAULT_EPSILON,
        "epsilon_levels": [],
        "tau": DEFAULT_TAU,
        "tpkl_mode": "per-level",
    },
    "adapter": {
        "rank": DEFAULT_RANK,
        "alpha": DEFAULT_ALPHA,
        "base": "identity",
    },
    "train": {
        "epochs": 30,
        "batch_size": 32,
        "lr": DEFAULT_LR,
        "weight_decay": 0.01,
        "optimizer": "adamw",
        "decode": "independent",
        "check_grads": False,
    },
    "sweep": {
        "lambda1s": [0.0, 0.5, 1.0, 2.0, 5.0],
        "lambda2s": [0.0],
    },
    "ablate": {
        "arms": list(DEFAULT_ARMS),
        "keep_ce": False,
    },
    "gradcheck": {
        "instances": 100,
    },
    "eval": {
        "preds": None,
    },
    "dump": {
        "adapter": None,
    },
}


def makeConfig(path=None, overrides=None, seed=None):
    """Resolve defaults, an optional JSON file, and key=value overrides

    Keyword Arguments:
        path {str} -- JSON config file (default: {None})
        overrides {list} -- "section.key=value" strings (default: {None})
        seed {int} -- takes precedence over file and overrides
                      (default: {None})

    Returns:
        ConfigManager -- resolved configuration
    """
    conf = ConfigManager(config_defaults, conf_path=path)
    conf.applyOverrides(overrides)
    if seed is not None:
        conf["seed"] = seed
    logger.debug("Config sources: %s", ", ".join(conf.sources))
    return conf


def trainConfigFromManager(conf):
    loss, adapter, train = conf["loss"], conf["adapter"], conf["train"]
    weights = LossWeights(loss["lambda1"], loss["lambda2"], ce=loss["ce"])
    return TrainConfig(
        epochs=train["epochs"], batch_size=train["batch_size"],
        lr=train["lr"], weight_decay=train["weight_decay"], weights=weights,
        epsilon=loss["epsilon"], epsilon_levels=loss["epsilon_levels"],
        tau=loss["tau"], rank=adapter["rank"], alpha=adapter["alpha"],
        seed=conf["seed"], tpkl_mode=loss["tpkl_mode"],
        optimizer=train["optimizer"], decode=train["decode"],
        check_grads=train["check_grads"],
        val_fraction=conf["data.val_fraction"], base=adapter["base"])


def synthSpecFromManager(conf):
    synth = conf["synth"]
    return SynthSpec(branching=synth["branching"], dim=synth["dim"],
                     per_leaf=synth["per_leaf"], spread=synth["spread"],
                     signal=synth["signal"], seed=conf["seed"],
                     val_fraction=conf["data.val_fraction"])
