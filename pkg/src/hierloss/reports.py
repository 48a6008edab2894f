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
Plain-text tables for evaluation reports, sweeps, grids and ablations
"""

import pandas as pd

__all__ = ["formatReport", "formatSweepTable", "formatGridTable",
           "formatAblationTable"]

METRIC_LABELS = (("accuracy", "Accuracy"), ("fpa", "FPA"), ("tice", "TICE"),
                 ("wap", "wAP"))


def _percent(value):
    return "-" if pd.isna(value) else "{:.1f}".format(100.0 * value)


def formatReport(report, taxonomy=None):
    """Per-level table plus the summary metrics of an EvalReport"""
    names = taxonomy.levelNames if taxonomy is not None else [
        "level{}".format(nr) for nr in range(1, len(report.level_accuracy) + 1)]
    links = [None] + list(report.invalid_links)
    levels = pd.DataFrame({
        "level": names,
        "classes": list(taxonomy.sizes) if taxonomy is not None else "-",
        "accuracy": [_percent(v) for v in report.level_accuracy],
        "precision": [_percent(v) for v in report.level_precision],
        "invalid_links": ["-" if v is None else v for v in links],
    })
    lines = [levels.to_string(index=False), ""]
    lines.append("samples        {}".format(report.num_samples))
    for name, label in METRIC_LABELS:
        lines.append("{:<14} {}".format(label, _percent(getattr(report,
                                                                 name))))
    lines.append("invalid paths  {}".format(report.invalid_paths))
    return "\n".join(lines) + "\n"


def formatSweepTable(table, axis="lambda1"):
    """Metrics as rows, one column per swept weight value

    Arguments:
        table {DataFrame} -- lambdaSweep / gridSearch output

    Keyword Arguments:
        axis {str} -- column holding the swept value; when both lambdas
                      vary, columns are labelled "l1/l2" (default: "lambda1")
    """
    if "lambda1" in table and "lambda2" in table and \
            table["lambda1"].nunique() > 1 and table["lambda2"].nunique() > 1:
        labels = ["{:g}/{:g}".format(a, b)
                  for a, b in zip(table["lambda1"], table["lambda2"])]
    else:
        labels = ["{:g}".format(v) for v in table[axis]]
    grid = pd.DataFrame(
        [[_percent(v) for v in table[name]] for name, _ in METRIC_LABELS],
        index=[label for _, label in METRIC_LABELS], columns=labels)
    grid.columns.name = "CE + {} *".format(axis)
    return grid.to_string() + "\n"


def formatGridTable(table, metric="accuracy"):
    """lambda1 x lambda2 matrix of one metric"""
    grid = table.pivot(index="lambda1", columns="lambda2", values=metric)
    return grid.apply(lambda col: col.map(_percent)).to_string() + "\n"


def formatAblationTable(table):
    """One row per ablation arm with its weights and final metrics"""
    view = table[["arm", "ce", "lambda1", "lambda2", "status"]].copy()
    for name, label in METRIC_LABELS:
        view[label] = table[name].map(_percent)
    return view.to_string(index=False) + "\n"
