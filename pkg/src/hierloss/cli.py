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
Command line interface

    hierloss <command> [--config PATH] [--seed N] [--out DIR]
                       [--set key=value ...] [command options]

Every invocation creates <out>/<YYYYmmdd-HHMMSS>-seed<N>/ holding the
resolved config plus the command's outputs. Failures print an error JSON
to stderr (and to error.json in the run directory) and exit with 1.
"""

import os
import sys
import logging
import argparse

import numpy as np

from .config import (makeConfig, trainConfigFromManager,
                     synthSpecFromManager)
from .consts import (PROJECT, RUN_FILES, TPKL_MODES, DECODERS, OPTIMIZERS,
                     ABLATION_ARMS)
from .dataio import (loadDataset, loadPredictions, saveFeatures,
                     saveClassEmbeddings, savePredictions, dumpEmbeddings)
from .embedspace import loadAdapter, saveAdapter, adapterForwardBatch
from .generator import generateSynthetic
from .gradcheck import GradientCheckError, runGradientChecks
from .libhier.configmanager import ConfigError
from .metrics import evaluate
from .reports import (formatReport, formatSweepTable, formatGridTable,
                      formatAblationTable)
from .taxonomy import loadTaxonomy, dumpTaxonomy
from .trainer import (DivergenceError, Trainer, gridSearch, ablation)
from .utils import (HierlossError, errorPayload, dumpJson, writeJson,
                    writeText, makeRunDir, parseNumberList)

__all__ = ["buildParser", "setupLogging", "run"]

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# argparse dest -> config key
FLAG_KEYS = (
    ("taxonomy", "data.taxonomy"),
    ("features", "data.features"),
    ("embeddings", "data.embeddings"),
    ("val_fraction", "data.val_fraction"),
    ("branching", "synth.branching"),
    ("dim", "synth.dim"),
    ("per_leaf", "synth.per_leaf"),
    ("spread", "synth.spread"),
    ("signal", "synth.signal"),
    ("lambda1", "loss.lambda1"),
    ("lambda2", "loss.lambda2"),
    ("epsilon", "loss.epsilon"),
    ("tau", "loss.tau"),
    ("tpkl_mode", "loss.tpkl_mode"),
    ("rank", "adapter.rank"),
    ("alpha", "adapter.alpha"),
    ("base", "adapter.base"),
    ("epochs", "train.epochs"),
    ("batch_size", "train.batch_size"),
    ("lr", "train.lr"),
    ("weight_decay", "train.weight_decay"),
    ("optimizer", "train.optimizer"),
    ("decode", "train.decode"),
    ("check_grads", "train.check_grads"),
    ("workers", "workers"),
    ("lambda1_values", "sweep.lambda1s"),
    ("lambda2_values", "sweep.lambda2s"),
    ("arms", "ablate.arms"),
    ("keep_ce", "ablate.keep_ce"),
    ("instances", "gradcheck.instances"),
    ("preds", "eval.preds"),
    ("adapter", "dump.adapter"),
)


def _intList(text):
    return parseNumberList(text, kind=int)


def _floatList(text):
    values = parseNumberList(text, kind=float)
    if not values:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return values


# Parser
######################################################################

def _addDataArgs(parser):
    group = parser.add_argument_group("data")
    group.add_argument("--taxonomy", help="taxonomy JSON file")
    group.add_argument("--features", help="feature file (.csv or .npz)")
    group.add_argument("--embeddings",
                       help="class embedding file; default: class means")
    group.add_argument("--val-fraction", type=float)
    group.add_argument("--branching", type=_intList,
                       help="synthetic tree when no --features, e.g. 3,3,3")
    group.add_argument("--dim", type=int)
    group.add_argument("--per-leaf", type=int)
    group.add_argument("--spread", type=float)
    group.add_argument("--signal", type=float)


def _addTrainArgs(parser, weights=True):
    group = parser.add_argument_group("training")
    if weights:
        group.add_argument("--lambda1", type=float, help="TP-KL weight")
        group.add_argument("--lambda2", type=float, help="HiSCE weight")
    group.add_argument("--epsilon", type=float)
    group.add_argument("--tau", type=float)
    group.add_argument("--tpkl-mode", choices=TPKL_MODES)
    group.add_argument("--rank", type=int)
    group.add_argument("--alpha", type=float)
    group.add_argument("--base", choices=("identity", "random"))
    group.add_argument("--epochs", type=int)
    group.add_argument("--batch-size", type=int)
    group.add_argument("--lr", type=float)
    group.add_argument("--weight-decay", type=float)
    group.add_argument("--optimizer", choices=OPTIMIZERS)
    group.add_argument("--decode", choices=DECODERS)
    group.add_argument("--check-grads", action="store_true", default=None,
                       help="spot-check every adapter gradient")


def buildParser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="runs",
                        help="parent of the run directory (default: runs)")
    common.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="config override, may be repeated")
    common.add_argument("--workers", type=int)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog=PROJECT.MODULE,
                                     description=PROJECT.DESCRIPTION)
    parser.add_argument("--version", action="version",
                        version="{} {} ({})".format(
                            PROJECT.NAME, PROJECT.VERSION, PROJECT.LICENSE))
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    cmd = sub.add_parser("gen-synth", parents=[common],
                         help="write a synthetic dataset")
    _addDataArgs(cmd)
    cmd.add_argument("--format", choices=("npz", "csv"), default="npz")

    cmd = sub.add_parser("train", parents=[common], help="train an adapter")
    _addDataArgs(cmd)
    _addTrainArgs(cmd)

    cmd = sub.add_parser("eval", parents=[common],
                         help="evaluate a prediction file")
    cmd.add_argument("--preds", help="prediction CSV")
    cmd.add_argument("--taxonomy", help="taxonomy JSON file")

    cmd = sub.add_parser("sweep", parents=[common],
                         help="train over a lambda1 x lambda2 grid")
    _addDataArgs(cmd)
    _addTrainArgs(cmd, weights=False)
    cmd.add_argument("--lambda1", dest="lambda1_values", type=_floatList,
                     help="lambda1 grid (default: 0,0.5,1,2,5)")
    cmd.add_argument("--lambda2", dest="lambda2_values", type=_floatList,
                     help="lambda2 grid (default: 0)")

    cmd = sub.add_parser("ablate", parents=[common],
                         help="compare loss-term ablation arms")
    _addDataArgs(cmd)
    _addTrainArgs(cmd)
    cmd.add_argument("--arms", type=lambda t: parseNumberList(t, kind=str),
                     help="subset of " + ",".join(sorted(ABLATION_ARMS)))
    cmd.add_argument("--keep-ce", action="store_true", default=None,
                     help="keep CE in the tpkl_only arm")

    cmd = sub.add_parser("check-grads", parents=[common],
                         help="finite-difference gradient checks")
    cmd.add_argument("--instances", type=int, help="default: 100")

    cmd = sub.add_parser("dump-embeddings", parents=[common],
                         help="write adapted features and class embeddings")
    _addDataArgs(cmd)
    cmd.add_argument("--adapter", help="adapter .npz; default: no adapter")

    return parser


def setupLogging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (
        logging.WARNING if quiet else logging.INFO)
    root = logging.getLogger(PROJECT.MODULE)
    for handler in list(root.handlers):
        if not isinstance(handler, logging.NullHandler):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


# Helpers
######################################################################

def _resolveConfig(args):
    conf = makeConfig(args.config, args.overrides)
    for dest, key in FLAG_KEYS:
        value = getattr(args, dest, None)
        if value is not None:
            conf[key] = value
    if args.seed is not None:
        conf["seed"] = args.seed
    return conf


def _runFile(run_dir, name):
    return os.path.join(run_dir, RUN_FILES[name])


def _loadData(conf):
    """Dataset from data.* files, or the synthetic benchmark otherwise"""
    if conf["data.features"]:
        if not conf["data.taxonomy"]:
            raise ConfigError("Feature files need a taxonomy (--taxonomy)")
        taxonomy = loadTaxonomy(conf["data.taxonomy"])
        return loadDataset(taxonomy, conf["data.features"],
                           conf["data.embeddings"],
                           val_fraction=conf["data.val_fraction"],
                           seed=conf["seed"])
    return generateSynthetic(synthSpecFromManager(conf))


def _summary(command, run_dir, **values):
    result = {"status": "ok", "command": command, "run_dir": run_dir}
    result.update(values)
    sys.stdout.write(dumpJson(result))


def _writeRecords(run_dir, records):
    writeJson(_runFile(run_dir, "records"),
              [record.toDict() for record in records])


# Commands
######################################################################

def cmdGenSynth(args, conf, run_dir):
    data = generateSynthetic(synthSpecFromManager(conf))
    dumpTaxonomy(data.taxonomy, _runFile(run_dir, "taxonomy"))
    features = _runFile(run_dir, "features")
    embeddings = _runFile(run_dir, "class_embeddings")
    if args.format == "csv":
        features = os.path.splitext(features)[0] + ".csv"
        embeddings = os.path.splitext(embeddings)[0] + ".csv"
    saveFeatures(features, data.features, data.labels, data.taxonomy.sizes)
    saveClassEmbeddings(embeddings, data.class_embeds)
    _summary(args.command, run_dir, num_samples=len(data),
             num_leaves=data.taxonomy.sizes[-1],
             sizes=list(data.taxonomy.sizes), features=features,
             embeddings=embeddings)


def cmdTrain(args, conf, run_dir):
    data = _loadData(conf)
    trainer = Trainer(trainConfigFromManager(conf), data)
    record = trainer.run()
    writeJson(_runFile(run_dir, "record"), record.toDict())
    writeJson(_runFile(run_dir, "timing"), {"wall_time": record.wall_time})
    record.historyFrame().to_csv(_runFile(run_dir, "history"), index=False)
    if not record.ok:
        raise DivergenceError(
            "Training diverged in epoch {}".format(record.failed_epoch))
    report = record.final_report
    writeJson(_runFile(run_dir, "report_json"), report.toDict())
    writeText(_runFile(run_dir, "report_txt"),
              formatReport(report, data.taxonomy))
    saveAdapter(record.adapter, _runFile(run_dir, "adapter"))
    savePredictions(_runFile(run_dir, "predictions"),
                    trainer.predict(trainer.val_idx))
    dumpEmbeddings(_runFile(run_dir, "embeddings"), trainer.transform(),
                   data.labels, data.class_embeds)
    _summary(args.command, run_dir, report=report.toDict())


def cmdEval(args, conf, run_dir):
    taxonomy_path = conf["data.taxonomy"]
    if not taxonomy_path:
        raise ConfigError("eval needs a taxonomy (--taxonomy)")
    if not conf["eval.preds"]:
        raise ConfigError("eval needs a prediction file (--preds)")
    taxonomy = loadTaxonomy(taxonomy_path)
    report = evaluate(loadPredictions(conf["eval.preds"]), taxonomy)
    writeJson(_runFile(run_dir, "report_json"), report.toDict())
    writeText(_runFile(run_dir, "report_txt"), formatReport(report, taxonomy))
    _summary(args.command, run_dir, report=report.toDict())


def cmdSweep(args, conf, run_dir):
    data = _loadData(conf)
    config = trainConfigFromManager(conf)
    lambda1s, lambda2s = conf["sweep.lambda1s"], conf["sweep.lambda2s"]
    best, record, table, records = gridSearch(lambda1s, lambda2s, config,
                                              data, conf["workers"])
    _writeRecords(run_dir, records)
    table.to_csv(_runFile(run_dir, "grid_csv"), index=False)
    axis = "lambda2" if len(lambda1s) == 1 and len(lambda2s) > 1 \
        else "lambda1"
    table.to_csv(_runFile(run_dir, "sweep_csv"), index=False)
    text = formatSweepTable(table, axis)
    if len(lambda1s) > 1 and len(lambda2s) > 1:
        text += "\naccuracy (rows lambda1, columns lambda2)\n"
        text += formatGridTable(table)
    writeText(_runFile(run_dir, "sweep_txt"), text)
    _summary(args.command, run_dir, best=best.toDict(),
             best_report=record.final_report.toDict(),
             cells=len(table), failed=int((table["status"] != "ok").sum()))


def cmdAblate(args, conf, run_dir):
    data = _loadData(conf)
    config = trainConfigFromManager(conf)
    arms = list(conf["ablate.arms"])
    records, table = ablation(config, data, arms=arms,
                              keep_ce=bool(conf["ablate.keep_ce"]),
                              workers=conf["workers"])
    _writeRecords(run_dir, [records[arm] for arm in arms])
    table.to_csv(_runFile(run_dir, "ablation_csv"), index=False)
    writeText(_runFile(run_dir, "ablation_txt"), formatAblationTable(table))
    _summary(args.command, run_dir, arms=arms,
             fpa={arm: rec.final_report.fpa if rec.ok else None
                  for arm, rec in records.items()})


def cmdCheckGrads(args, conf, run_dir):
    result = runGradientChecks(conf["gradcheck.instances"], conf["seed"])
    writeJson(_runFile(run_dir, "gradcheck"), result)
    if not result["passed"]:
        raise GradientCheckError("Analytic gradients disagree with finite "
                                 "differences: {}".format(
                                     result["max_rel_error"]))
    _summary(args.command, run_dir, max_rel_error=result["max_rel_error"])


def cmdDumpEmbeddings(args, conf, run_dir):
    data = _loadData(conf)
    features = data.features
    adapter = conf["dump.adapter"]
    if adapter:
        features = adapterForwardBatch(loadAdapter(adapter), features)
    if not np.all(np.isfinite(features)):
        raise HierlossError("Adapted features are not finite")
    dumpEmbeddings(_runFile(run_dir, "embeddings"), features, data.labels,
                   data.class_embeds)
    _summary(args.command, run_dir, num_samples=len(data), adapter=adapter)


COMMANDS = {
    "gen-synth": cmdGenSynth,
    "train": cmdTrain,
    "eval": cmdEval,
    "sweep": cmdSweep,
    "ablate": cmdAblate,
    "check-grads": cmdCheckGrads,
    "dump-embeddings": cmdDumpEmbeddings,
}


def run(argv=None):
    """Parse argv, run one command, return the process exit status

    Usage errors exit with 2 through argparse.
    """
    args = buildParser().parse_args(argv)
    setupLogging(args.verbose, args.quiet)
    run_dir = None
    try:
        conf = _resolveConfig(args)
        run_dir = makeRunDir(args.out, conf["seed"])
        conf.save(_runFile(run_dir, "config"))
        COMMANDS[args.command](args, conf, run_dir)
    except (HierlossError, IOError, OSError) as e:
        payload = errorPayload(e, args.command)
        payload["run_dir"] = run_dir
        sys.stderr.write(dumpJson(payload))
        if run_dir:
            writeJson(_runFile(run_dir, "error"), payload)
        logger.debug("Command failed", exc_info=True)
        return 1
    return 0
