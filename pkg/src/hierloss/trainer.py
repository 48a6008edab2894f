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
Adapter training loop, lambda grid search, and loss ablations
"""

import time
import logging
import itertools
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from .consts import (DEFAULT_TAU, DEFAULT_RANK, DEFAULT_ALPHA, DEFAULT_LR,
                     DEFAULT_EPSILON, TPKL_MODES, DECODERS, OPTIMIZERS,
                     ABLATION_ARMS, DEFAULT_ARMS)
from .embedspace import (initAdapter, normalizeRows, cosineLogitsBatch,
                         cosineBackward, adapterForwardBatch,
                         adapterGradBatch)
from .generator import SynthSpec
from .gradcheck import GradientCheckError, relativeError
from .libhier.configmanager import ConfigError
from .libhier.platform import workerCount
from .losses import LossWeights, buildSmoothingTables, totalLossBatch
from .metrics import PredictionSet, decodePredictions, evaluate
from .optim import makeOptimizer
from .utils import HierlossError

__all__ = ["DivergenceError", "SearchError", "TrainConfig", "RunRecord",
           "Trainer", "train", "runMany", "gridSearch", "lambdaSweep",
           "ablation", "benchmarkSpec", "benchmarkConfig",
           "STANDARD_BENCHMARK"]

logger = logging.getLogger(__name__)

# (3,3,3) tree where CE-only training lands well below perfect full-path
# accuracy, leaving room for the hierarchy terms
STANDARD_BENCHMARK = SynthSpec(branching=(3, 3, 3), dim=16, per_leaf=20,
                               spread=1.0, signal=0.6, seed=0)
BENCHMARK_EPOCHS = 60
BENCHMARK_EPSILON = 0.5

SPOT_ENTRIES = 3
SPOT_STEP = 1e-6
SPOT_TOL = 1e-4


class DivergenceError(HierlossError):
    pass


class SearchError(HierlossError):
    pass


class TrainConfig(object):
    """Hyperparameters of a single training run"""

    _fields = ("epochs", "batch_size", "lr", "weight_decay", "epsilon",
               "epsilon_levels", "tau", "rank", "alpha", "seed",
               "tpkl_mode", "optimizer", "decode", "check_grads",
               "val_fraction", "base")

    def __init__(self, epochs=30, batch_size=32, lr=DEFAULT_LR,
                 weight_decay=0.01, weights=None, epsilon=DEFAULT_EPSILON,
                 epsilon_levels=(), tau=DEFAULT_TAU, rank=DEFAULT_RANK,
                 alpha=DEFAULT_ALPHA, seed=0, tpkl_mode="per-level",
                 optimizer="adamw", decode="independent", check_grads=False,
                 val_fraction=0.2, base="identity"):
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.lr = float(lr)
        self.weight_decay = float(weight_decay)
        self.weights = weights if weights is not None else LossWeights()
        self.epsilon = float(epsilon)
        self.epsilon_levels = tuple(float(e) for e in epsilon_levels or ())
        self.tau = float(tau)
        self.rank = int(rank)
        self.alpha = float(alpha)
        self.seed = int(seed)
        self.tpkl_mode = tpkl_mode
        self.optimizer = optimizer
        self.decode = decode
        self.check_grads = bool(check_grads)
        self.val_fraction = float(val_fraction)
        self.base = base
        self._validate()

    def _validate(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")
        if not (np.isfinite(self.lr) and self.lr > 0):
            raise ConfigError("Learning rate must be finite and positive")
        if self.weight_decay < 0:
            raise ConfigError("Weight decay must be >= 0")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.rank < 1 or not self.alpha > 0:
            raise ConfigError("Adapter needs rank >= 1 and alpha > 0")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")
        for name, value, allowed in (("tpkl_mode", self.tpkl_mode,
                                      TPKL_MODES),
                                     ("optimizer", self.optimizer,
                                      OPTIMIZERS),
                                     ("decode", self.decode, DECODERS)):
            if value not in allowed:
                raise ConfigError("{} must be one of {}, got {!r}".format(
                    name, allowed, value))

    def replace(self, **changes):
        """Copy with some fields changed"""
        values = {name: getattr(self, name) for name in self._fields}
        values["weights"] = self.weights
        values.update(changes)
        return TrainConfig(**values)

    def toDict(self):
        result = {name: getattr(self, name) for name in self._fields}
        result["epsilon_levels"] = list(self.epsilon_levels)
        result["weights"] = self.weights.toDict()
        return result


class RunRecord(object):
    """Outcome of one training run

    wall_time and the trained adapter are kept out of toDict() so that the
    serialized record only depends on config and seed.
    """

    def __init__(self, config, status="ok", failed_epoch=None, history=None,
                 initial_loss=None, initial_report=None, final_report=None,
                 train_report=None, grad_check_error=None, wall_time=0.0,
                 adapter=None):
        self.config = config
        self.status = status
        self.failed_epoch = failed_epoch
        self.history = history or []
        self.initial_loss = initial_loss
        self.initial_report = initial_report
        self.final_report = final_report
        self.train_report = train_report
        self.grad_check_error = grad_check_error
        self.wall_time = wall_time
        self.adapter = adapter

    @property
    def ok(self):
        return self.status == "ok"

    def historyFrame(self):
        return pd.DataFrame(self.history)

    def toDict(self):
        def report(rep):
            return rep.toDict() if rep is not None else None
        return {
            "status": self.status,
            "failed_epoch": self.failed_epoch,
            "config": self.config.toDict(),
            "history": self.history,
            "initial_loss": self.initial_loss,
            "initial_report": report(self.initial_report),
            "final_report": report(self.final_report),
            "train_report": report(self.train_report),
            "grad_check_error": self.grad_check_error,
        }


class Trainer(object):
    """Mini-batch training of the low-rank adapter on frozen features

    The adapter maps features into the class-embedding space; per-level
    logits are cosine similarities with the fixed class embeddings.
    """

    def __init__(self, config, data):
        self.config = config
        self.data = data
        self.taxonomy = data.taxonomy
        self.train_idx, self.val_idx = data.ensureSplit(config.val_fraction,
                                                        config.seed)
        self.rng = np.random.default_rng(config.seed)
        self.state = initAdapter(data.dim, config.rank, config.alpha,
                                 self.rng, dim_out=data.embedDim,
                                 base=config.base)
        self.unit_embeds = [normalizeRows(e) for e in data.class_embeds]
        self.tables = buildSmoothingTables(self.taxonomy, config.epsilon,
                                           config.epsilon_levels)
        self.optimizer = makeOptimizer(config.optimizer, config.lr,
                                       config.weight_decay)
        self.check_rng = np.random.default_rng(config.seed + 1)
        self.check_error = 0.0 if config.check_grads else None
        self.history = []

    # Forward / backward
    ######################################################################

    def scores(self, idx, state=None):
        """Per-level cosine logits of the samples in idx"""
        state = state or self.state
        H = adapterForwardBatch(state, self.data.features[idx])
        return [cosineLogitsBatch(H, unit)[0] for unit in self.unit_embeds]

    def lossAndGrads(self, idx, state=None, need_grads=True):
        """Mean batch loss and gradients w.r.t. the adapter factors

        Returns:
            tuple -- (LossResult, {"A": grad, "B": grad} or None)

        Raises:
            DivergenceError -- adapter output is no longer finite
        """
        state = state or self.state
        X = self.data.features[idx]
        H = adapterForwardBatch(state, X)
        if not np.all(np.isfinite(H)):
            raise DivergenceError("Adapter output is not finite")
        caches = [cosineLogitsBatch(H, unit) for unit in self.unit_embeds]
        result = totalLossBatch([c[0] for c in caches],
                                self.data.labels[idx], self.tables,
                                self.config.weights, self.config.tau,
                                self.config.tpkl_mode)
        if not need_grads:
            return result, None
        dH = np.zeros_like(H)
        for (Z, unit, norms), unit_embeds, grad in zip(
                caches, self.unit_embeds, result.grads):
            dH += cosineBackward(grad, Z, unit, norms, unit_embeds)
        grad_A, grad_B = adapterGradBatch(state, X, dH)
        return result, {"A": grad_A, "B": grad_B}

    def spotCheck(self, idx, grads):
        """Compare a few gradient entries with central differences"""
        picks = []
        for name in ("A", "B"):
            shape = grads[name].shape
            count = min(SPOT_ENTRIES, grads[name].size)
            for flat in self.check_rng.choice(grads[name].size, size=count,
                                              replace=False):
                picks.append((name, np.unravel_index(flat, shape)))
        analytic = np.array([grads[name][pos] for name, pos in picks])
        numeric = np.zeros_like(analytic)
        for nr, (name, pos) in enumerate(picks):
            trial = self.state.copy()
            param = trial.params()[name]
            orig = param[pos]
            param[pos] = orig + SPOT_STEP
            plus = self.lossAndGrads(idx, trial, need_grads=False)[0].total
            param[pos] = orig - SPOT_STEP
            minus = self.lossAndGrads(idx, trial, need_grads=False)[0].total
            numeric[nr] = (plus - minus) / (2.0 * SPOT_STEP)
        error = relativeError(analytic, numeric, floor=1e-6)
        self.check_error = max(self.check_error, error)
        if error > SPOT_TOL:
            raise GradientCheckError(
                "Adapter gradient spot check failed: rel. error {:.3e}".format(
                    error))

    # Training
    ######################################################################

    def fitEpoch(self, epoch):
        """One pass over the shuffled training split

        Returns:
            dict -- sample-weighted mean loss terms of the epoch
        """
        order = self.rng.permutation(self.train_idx)
        size = self.config.batch_size
        sums = {"loss": 0.0, "ce": 0.0, "tpkl": 0.0, "hisce": 0.0}
        for start in range(0, order.size, size):
            idx = order[start:start + size]
            result, grads = self.lossAndGrads(idx)
            if not np.isfinite(result.total):
                raise DivergenceError("Loss is not finite")
            if self.config.check_grads:
                self.spotCheck(idx, grads)
            with np.errstate(over="ignore", invalid="ignore"):
                self.optimizer.step(self.state.params(), grads)
            sums["loss"] += result.total * idx.size
            for term in ("ce", "tpkl", "hisce"):
                sums[term] += result.terms[term] * idx.size
            logger.debug("epoch %d batch %d loss %.6f", epoch,
                         start // size + 1, result.total)
        if not all(np.all(np.isfinite(p))
                   for p in self.state.params().values()):
            raise DivergenceError("Adapter parameters are not finite")
        return {name: value / order.size for name, value in sums.items()}

    def run(self):
        """Train for the configured number of epochs

        Returns:
            RunRecord -- status "failed" with failed_epoch on divergence
        """
        config = self.config
        started = time.perf_counter()
        record = RunRecord(config)
        initial, _ = self.lossAndGrads(self.train_idx, need_grads=False)
        record.initial_loss = initial.toDict()
        record.initial_report = self.evaluate(self.val_idx)

        for epoch in range(1, config.epochs + 1):
            try:
                losses = self.fitEpoch(epoch)
            except DivergenceError as e:
                logger.warning("Run diverged in epoch %d: %s", epoch, e)
                record.status = "failed"
                record.failed_epoch = epoch
                break
            report = self.evaluate(self.val_idx)
            entry = {"epoch": epoch}
            entry.update(losses)
            entry.update({"val_accuracy": report.accuracy,
                          "val_fpa": report.fpa, "val_tice": report.tice,
                          "val_wap": report.wap})
            self.history.append(entry)
            logger.info("epoch %d/%d loss %.4f val acc %.4f FPA %.4f "
                        "TICE %.4f", epoch, config.epochs, losses["loss"],
                        report.accuracy, report.fpa, report.tice)

        record.history = self.history
        if record.ok:
            record.final_report = self.evaluate(self.val_idx)
            record.train_report = self.evaluate(self.train_idx)
            record.adapter = self.state
        record.grad_check_error = self.check_error
        record.wall_time = time.perf_counter() - started
        return record

    # Inference
    ######################################################################

    def transform(self, features=None):
        """Adapter output for the given (default: all) features"""
        if features is None:
            features = self.data.features
        return adapterForwardBatch(self.state, features)

    def predict(self, idx):
        scores = self.scores(idx)
        preds = decodePredictions(scores, self.taxonomy, self.config.decode,
                                  self.config.tau)
        return PredictionSet(preds, self.data.labels[idx], sample_ids=idx)

    def evaluate(self, idx):
        return evaluate(self.predict(idx), self.taxonomy)


def benchmarkSpec(seed=0):
    """STANDARD_BENCHMARK with another generator seed"""
    bench = STANDARD_BENCHMARK
    return SynthSpec(branching=bench.branching, dim=bench.dim,
                     per_leaf=bench.per_leaf, spread=bench.spread,
                     signal=bench.signal, seed=seed)


def benchmarkConfig(seed=0, **kwargs):
    """Training settings used for the ablation arms on the benchmark

    The larger sibling-smoothing mass keeps HiSCE from vanishing next to
    the CE and TP-KL terms of the joint objective.
    """
    kwargs.setdefault("epochs", BENCHMARK_EPOCHS)
    kwargs.setdefault("epsilon", BENCHMARK_EPSILON)
    return TrainConfig(seed=seed, **kwargs)


def train(config, data):
    """Train one adapter; see Trainer.run"""
    return Trainer(config, data).run()


def runMany(configs, data, workers=None):
    """Train several configs on the same data and split

    Runs are independent, so with more than one worker they are spread
    over processes; the result order always follows `configs`.
    """
    configs = list(configs)
    if configs:
        data.ensureSplit(configs[0].val_fraction, configs[0].seed)
    workers = min(workerCount(workers), max(len(configs), 1))
    if workers == 1:
        return [train(config, data) for config in configs]
    logger.info("Training %d runs on %d workers", len(configs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(train, configs, [data] * len(configs)))


def _summaryRow(record):
    report = record.final_report
    row = {"status": record.status}
    for name in ("accuracy", "fpa", "tice", "wap"):
        row[name] = getattr(report, name) if report is not None else np.nan
    row["final_loss"] = record.history[-1]["loss"] if record.history \
        else np.nan
    return row


def lambdaSweep(values, config, data, axis="lambda1", workers=None):
    """One run per value of a single loss weight, the other kept fixed

    Returns:
        tuple -- (list of RunRecords, DataFrame with one row per value)
    """
    if axis not in ("lambda1", "lambda2"):
        raise SearchError("Sweep axis must be lambda1 or lambda2")
    if not values:
        raise SearchError("Sweep needs at least one value")
    base = config.weights.toDict()
    configs = []
    for value in values:
        weights = dict(base)
        weights[axis] = value
        configs.append(config.replace(weights=LossWeights(**weights)))
    records = runMany(configs, data, workers)
    rows = []
    for value, record in zip(values, records):
        row = {axis: float(value)}
        row.update(_summaryRow(record))
        rows.append(row)
    return records, pd.DataFrame(rows)


def gridSearch(lambda1s, lambda2s, config, data, workers=None):
    """Exhaustive search over (lambda1, lambda2) pairs

    Every cell trains with the same seed and split. The best cell has the
    highest validation accuracy; ties go to lower TICE, then to the lower
    lambda sum. Failed runs are excluded.

    Returns:
        tuple -- (best LossWeights, best RunRecord, DataFrame of all cells,
                  list of every cell's RunRecord in table order)

    Raises:
        SearchError -- empty grid or no successful run
    """
    if not len(lambda1s) or not len(lambda2s):
        raise SearchError("Grid search needs non-empty lambda lists")
    cells = list(itertools.product(lambda1s, lambda2s))
    weights = [LossWeights(l1, l2, ce=config.weights.ce) for l1, l2 in cells]
    records = runMany([config.replace(weights=w) for w in weights], data,
                      workers)

    rows = []
    for (l1, l2), record in zip(cells, records):
        row = {"lambda1": float(l1), "lambda2": float(l2)}
        row.update(_summaryRow(record))
        rows.append(row)
    table = pd.DataFrame(rows)

    failed = sum(not record.ok for record in records)
    if failed:
        logger.warning("%d of %d grid cells failed and were excluded",
                       failed, len(records))
    candidates = [nr for nr, record in enumerate(records) if record.ok]
    if not candidates:
        raise SearchError("Every grid cell failed")
    best = min(candidates, key=lambda nr: (
        -records[nr].final_report.accuracy, records[nr].final_report.tice,
        weights[nr].lambda1 + weights[nr].lambda2, nr))
    return weights[best], records[best], table, records


def ablation(config, data, arms=DEFAULT_ARMS, lambda1=None, lambda2=None,
             keep_ce=False, workers=None):
    """Train the loss-term ablation arms with a shared seed and split

    Arms are named in consts.ABLATION_ARMS. Active hierarchy terms use
    lambda1 / lambda2, falling back to the config weights and to 1.0 when
    those are zero. keep_ce keeps CE in the "tpkl_only" arm.

    Returns:
        tuple -- (dict arm -> RunRecord, DataFrame with one row per arm)
    """
    unknown = [arm for arm in arms if arm not in ABLATION_ARMS]
    if unknown or not arms:
        raise SearchError("Unknown or missing ablation arms: {}".format(
            ", ".join(unknown)))
    if lambda1 is None:
        lambda1 = config.weights.lambda1 or 1.0
    if lambda2 is None:
        lambda2 = config.weights.lambda2 or 1.0

    configs = []
    for arm in arms:
        ce, use_kl, use_hisce = ABLATION_ARMS[arm]
        if keep_ce and arm == "tpkl_only":
            ce = 1.0
        weights = LossWeights(lambda1 if use_kl else 0.0,
                              lambda2 if use_hisce else 0.0, ce=ce)
        configs.append(config.replace(weights=weights))
    records = runMany(configs, data, workers)

    rows = []
    for arm, cfg, record in zip(arms, configs, records):
        row = {"arm": arm}
        row.update(cfg.weights.toDict())
        row.update(_summaryRow(record))
        row["initial_loss"] = record.initial_loss["total"]
        rows.append(row)
    return dict(zip(arms, records)), pd.DataFrame(rows)
