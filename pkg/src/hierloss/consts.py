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
Project-wide constants
"""

from ._version import __version__

__all__ = [
    "PROJECT",
    "DEFAULT_TAU", "DEFAULT_RANK", "DEFAULT_ALPHA", "DEFAULT_LR",
    "DEFAULT_EPSILON", "TPKL_MODES", "DECODERS", "OPTIMIZERS",
    "ABLATION_ARMS", "DEFAULT_ARMS", "ENV_THREADS", "RUN_FILES"
]

# PROPERTIES DESCRIBING THE PROJECT

class PROJECT(object):
    """Class storing general project properties
    Property names need to be all-uppercase with no leading underscores
    """
    NAME = "Hierloss"
    MODULE = "hierloss"
    VERSION = __version__
    LICENSE = "GNU AGPLv3"
    DESCRIPTION = ("Hierarchy-aware classification losses, metrics, and "
                   "low-rank adapter training")

# NUMERIC DEFAULTS

# temperature for the similarity softmax, exposed as loss.tau
DEFAULT_TAU = 0.07
# low-rank adapter
DEFAULT_RANK = 16
DEFAULT_ALPHA = 32.0
DEFAULT_LR = 1e-3
DEFAULT_EPSILON = 0.1

TPKL_MODES = ("per-level", "global")
DECODERS = ("independent", "leaf", "path")
OPTIMIZERS = ("adamw", "sgd")

# ABLATION ARMS
# name: (ce weight, lambda1 active, lambda2 active)
ABLATION_ARMS = {
    "ce": (1.0, False, False),
    "tpkl_only": (0.0, True, False),
    "hisce_only": (0.0, False, True),
    "joint": (1.0, True, True),
    "ce_hisce": (1.0, False, True),
}
DEFAULT_ARMS = ("ce", "tpkl_only", "hisce_only", "joint")

# ENVIRONMENT

ENV_THREADS = "HIERLOSS_THREADS"

# RUN DIRECTORY LAYOUT

RUN_FILES = {
    "config": "config.json",
    "record": "run_record.json",
    "timing": "timing.json",
    "history": "history.csv",
    "report_json": "report.json",
    "report_txt": "report.txt",
    "adapter": "adapter.npz",
    "embeddings": "embeddings.csv",
    "sweep_csv": "sweep.csv",
    "sweep_txt": "sweep.txt",
    "grid_csv": "grid.csv",
    "ablation_csv": "ablation.csv",
    "ablation_txt": "ablation.txt",
    "error": "error.json",
    "taxonomy": "taxonomy.json",
    "features": "features.npz",
    "class_embeddings": "class_embeddings.npz",
    "predictions": "predictions.csv",
    "gradcheck": "gradcheck.json",
    "records": "run_records.json",
}
