# -*- coding: utf-8 -*-

import numpy as np
import pytest

from hierloss.metrics import (MetricInputError, PredictionSet, EvalReport,
                              levelAccuracy, weightedAP, tice, fpa, evaluate,
                              decodePredictions)
from hierloss.taxonomy import parseTaxonomy

from test_taxonomy import cubLikeDoc


def bruteForce(preds, truths, taxonomy):
    """Independent recount of every metric with plain loops"""
    count, num = len(preds), taxonomy.numLevels
    per_level = [sum(preds[n][l] == truths[n][l] for n in range(count)) /
                 float(count) for l in range(num)]
    full = sum(all(preds[n][l] == truths[n][l] for l in range(num))
               for n in range(count)) / float(count)
    invalid = 0
    for n in range(count):
        for l in range(1, num):
            if taxonomy.parentOf(l + 1, int(preds[n][l])) != preds[n][l - 1]:
                invalid += 1
                break
    precisions = []
    for l, size in enumerate(taxonomy.sizes):
        values = []
        for cid in range(size):
            hits = [truths[n][l] == cid for n in range(count)
                    if preds[n][l] == cid]
            values.append(sum(hits) / float(len(hits)) if hits else 0.0)
        precisions.append(sum(values) / size)
    total = float(sum(taxonomy.sizes))
    wap = sum(size / total * p for size, p in zip(taxonomy.sizes, precisions))
    return per_level, full, invalid / float(count), wap


def randomPredictions(rng, taxonomy, count=20, noise=0.4):
    leaves = rng.integers(0, taxonomy.sizes[-1], size=count)
    truths = taxonomy.leafPaths()[leaves]
    preds = truths.copy()
    for l, size in enumerate(taxonomy.sizes):
        flip = rng.random(count) < noise
        preds[flip, l] = rng.integers(0, size, size=flip.sum())
    return PredictionSet(preds, truths)


def test_perfect_predictions(balanced_tree):
    truths = balanced_tree.leafPaths()
    report = evaluate(PredictionSet(truths, truths), balanced_tree)
    assert report.level_accuracy == [1.0, 1.0, 1.0]
    assert report.accuracy == 1.0
    assert report.fpa == 1.0
    assert report.tice == 0.0
    assert report.wap == pytest.approx(1.0)
    assert report.invalid_paths == 0


def test_macro_accuracy_half(fig_tree):
    truths = np.array([[0, 0], [1, 3]])
    preds = np.array([[0, 1], [1, 4]])
    per_level, macro = levelAccuracy(PredictionSet(preds, truths))
    np.testing.assert_array_equal(per_level, [1.0, 0.0])
    assert macro == 0.5


def test_species_weight_of_cub_sizes():
    taxonomy = parseTaxonomy(cubLikeDoc())
    truths = taxonomy.leafPaths()
    preds = truths.copy()
    preds[:, 0] = (truths[:, 0] + 1) % 13
    preds[:, 1] = (truths[:, 1] + 1) % 38
    assert weightedAP(PredictionSet(preds, truths), taxonomy) == \
        pytest.approx(200.0 / 251.0)
    assert 200.0 / 251.0 == pytest.approx(0.79681, abs=1e-5)


def test_hand_computed_precision(single_level_tree):
    truths = np.array([[0], [0], [0], [1], [1], [1], [2], [2], [2], [2]])
    preds = np.array([[0], [0], [1], [1], [1], [2], [2], [2], [2], [0]])
    expected = (2.0 / 3.0 + 2.0 / 3.0 + 3.0 / 4.0) / 3.0
    assert weightedAP(PredictionSet(preds, truths), single_level_tree) == \
        pytest.approx(expected)


def test_never_predicted_class_counts_as_zero(single_level_tree):
    truths = np.array([[0], [1], [2]])
    preds = np.array([[0], [1], [1]])
    assert weightedAP(PredictionSet(preds, truths), single_level_tree) == \
        pytest.approx((1.0 + 0.5 + 0.0) / 3.0)


def test_tice_half(fig_tree):
    truths = np.array([[0, 1], [1, 3]])
    preds = np.array([[1, fig_tree.classId(2, "C")], [1, 3]])
    assert tice(PredictionSet(preds, truths), fig_tree) == 0.5


def test_tice_single_level(rng, single_level_tree):
    preds = randomPredictions(rng, single_level_tree, noise=0.9)
    assert tice(preds, single_level_tree) == 0.0


def test_fpa_one_wrong_level_each(balanced_tree):
    truths = balanced_tree.leafPaths()[:3]
    preds = truths.copy()
    for n in range(3):
        preds[n, n] = (preds[n, n] + 1) % balanced_tree.sizes[n]
    assert fpa(PredictionSet(preds, truths)) == 0.0


@pytest.mark.parametrize("seed", range(50))
def test_matches_brute_force(seed, balanced_tree):
    rng = np.random.default_rng(seed)
    preds = randomPredictions(rng, balanced_tree)
    report = evaluate(preds, balanced_tree)
    per_level, full, inconsistency, wap = bruteForce(
        preds.preds.tolist(), preds.truths.tolist(), balanced_tree)
    np.testing.assert_allclose(report.level_accuracy, per_level)
    assert report.fpa == pytest.approx(full)
    assert report.tice == pytest.approx(inconsistency)
    assert report.wap == pytest.approx(wap)
    assert report.fpa <= min(report.level_accuracy)
    assert report.tice + np.mean(
        np.all(balanced_tree.validLinks(preds.preds), axis=1)) == \
        pytest.approx(1.0)
    for value in (report.accuracy, report.wap, report.tice, report.fpa):
        assert 0.0 <= value <= 1.0


@pytest.mark.parametrize("seed", range(50))
def test_leaf_expanded_predictions_are_consistent(seed, balanced_tree):
    rng = np.random.default_rng(seed)
    truths = balanced_tree.leafPaths()[rng.integers(0, 8, size=20)]
    preds = balanced_tree.leafPaths()[rng.integers(0, 8, size=20)]
    assert tice(PredictionSet(preds, truths), balanced_tree) == 0.0


def test_permutation_invariance(rng, balanced_tree):
    preds = randomPredictions(rng, balanced_tree)
    order = rng.permutation(len(preds))
    shuffled = PredictionSet(preds.preds[order], preds.truths[order])
    assert evaluate(shuffled, balanced_tree) == evaluate(preds, balanced_tree)


def test_invalid_links_per_level(balanced_tree):
    truths = balanced_tree.leafPaths()[[0, 7]]
    preds = np.array([[0, 0, 0], [0, 3, 7]])
    report = evaluate(PredictionSet(preds, truths), balanced_tree)
    assert report.invalid_links == [1, 0]
    assert report.invalid_paths == 1


def test_report_dict(rng, balanced_tree):
    report = evaluate(randomPredictions(rng, balanced_tree), balanced_tree)
    assert EvalReport.fromDict(report.toDict()) == report


@pytest.mark.parametrize("preds, truths", [
    (np.zeros((2, 3)), np.zeros((3, 3))),
    (np.zeros((0, 3)), np.zeros((0, 3))),
])
def test_bad_prediction_sets(preds, truths):
    with pytest.raises(MetricInputError):
        PredictionSet(preds, truths)


def test_out_of_range_ids(balanced_tree):
    preds = PredictionSet([[0, 0, 9]], [[0, 0, 0]])
    with pytest.raises(MetricInputError):
        evaluate(preds, balanced_tree)


# Decoding
######################################################################

def test_independent_decoding_breaks_ties_low(fig_tree):
    scores = [np.array([[0.5, 0.5]]), np.array([[0.1, 0.9, 0.9, 0.0, 0.0]])]
    np.testing.assert_array_equal(
        decodePredictions(scores, fig_tree), [[0, 1]])


@pytest.mark.parametrize("decode", ["leaf", "path"])
def test_tree_decoders_are_consistent(rng, balanced_tree, decode):
    scores = [rng.standard_normal((30, s)) for s in balanced_tree.sizes]
    preds = decodePredictions(scores, balanced_tree, decode, tau=0.5)
    assert np.all(balanced_tree.validLinks(preds))


def test_path_decoding_prefers_joint_evidence(fig_tree):
    # leaf favors F slightly, parent strongly favors Parent1
    scores = [np.array([[5.0, -5.0]]),
              np.array([[1.0, 0.0, 0.0, 1.1, 0.0]])]
    np.testing.assert_array_equal(
        decodePredictions(scores, fig_tree, "leaf"), [[1, 3]])
    np.testing.assert_array_equal(
        decodePredictions(scores, fig_tree, "path"), [[0, 0]])


def test_unknown_decoder(fig_tree):
    with pytest.raises(MetricInputError):
        decodePredictions([np.zeros((1, 2)), np.zeros((1, 5))], fig_tree,
                          "beam")
