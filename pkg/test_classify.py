#!/usr/bin/env python3
"""
Test model classifiers, the majority baseline and accuracy/recall
"""
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from app.core.chordal import ModelGraph, boundary_graph, INDEPENDENCE
from app.core.classify import (
    ABSTAIN,
    ClassifyError,
    DefaultClassifier,
    ModelClassifier,
    Prediction,
    default_classifier,
    evaluate,
    naive_bayes_classifier,
)
from app.core.estimate import fit
from app.core.schema import Dataset
from conftest import all_cells, graph, make_schema, random_dataset


class FixedPredictions:
    """Replays predictions keyed by feature context"""

    def __init__(self, schema, answers):
        self.schema = schema
        self.answers = answers

    def predict(self, context):
        return self.answers[tuple(context)]


def independent_product_scores(train, context):
    """Classical Naive Bayes scores from per-feature conditional counts, in exact arithmetic"""
    schema = train.schema
    rows = train.expand()
    scores = []
    for s in range(schema.class_var.cardinality):
        in_sense = rows[rows[:, -1] == s]
        score = Fraction(len(in_sense), len(rows))
        for i, value in enumerate(context):
            score *= Fraction(int(np.count_nonzero(in_sense[:, i] == value)), len(in_sense)) if len(in_sense) else 0
        scores.append(score)
    return scores


def test_naive_bayes_worked_example():
    schema = make_schema([2, 2])
    # F=1 with sense a (0) eight times and sense b (1) twice; both senses ten times
    rows = [(1, 0)] * 8 + [(0, 0)] * 2 + [(1, 1)] * 2 + [(0, 1)] * 8
    classifier = naive_bayes_classifier(Dataset.from_rows(schema, rows))
    assert classifier.predict([1]) == Prediction(0)
    assert classifier.predict([0]) == Prediction(1)


def test_naive_bayes_matches_independent_product_exhaustively():
    for n_features in (1, 2, 3):
        schema = make_schema([2] * (n_features + 1))
        for seed in range(5):
            train = random_dataset(schema, 12, seed=seed)
            classifier = naive_bayes_classifier(train)
            for context in product(range(2), repeat=n_features):
                scores = independent_product_scores(train, context)
                best = max(scores)
                prediction = classifier.predict(list(context))
                if best == 0:
                    assert prediction.abstained
                else:
                    assert prediction.sense == scores.index(best)


def test_abstains_on_zero_estimates_and_unseen_levels():
    schema = make_schema([2, 2, 2])
    train = Dataset.from_rows(schema, [(0, 0, 0), (0, 1, 1), (1, 1, 0)])
    classifier = ModelClassifier(fit(train, boundary_graph(3, "saturated")))
    assert classifier.predict([1, 0]) == ABSTAIN
    assert classifier.predict(["0", "7"]).abstained
    assert classifier.predict([0, 5]).abstained
    assert classifier.predict(["1", "1"]) == Prediction(0)
    with pytest.raises(ClassifyError):
        classifier.predict([0])


def test_no_class_edges_predicts_the_majority_sense(mixed_dataset):
    g = ModelGraph(4, frozenset({(0, 1), (1, 2)}))
    classifier = ModelClassifier(fit(mixed_dataset, g))
    majority = default_classifier(mixed_dataset).sense
    for cell in all_cells(mixed_dataset.schema):
        assert classifier.predict(list(cell[:-1])).sense == majority


def test_irrelevant_feature_never_changes_the_prediction(mixed_dataset):
    # F2 (index 1) has no edge to the class
    classifier = ModelClassifier(fit(mixed_dataset, graph(4, (0, 3), (2, 3), (0, 1))))
    for a, c in product(range(3), range(4)):
        predictions = {classifier.predict([a, b, c]) for b in range(2)}
        assert len(predictions) == 1


def test_scaling_counts_changes_no_prediction(sparse_dataset):
    scaled = Dataset.from_rows(sparse_dataset.schema, sparse_dataset.vectors, counts=sparse_dataset.counts * 4)
    g = graph(4, (0, 3), (1, 3), (2, 3), (1, 2))
    original, bigger = ModelClassifier(fit(sparse_dataset, g)), ModelClassifier(fit(scaled, g))
    for cell in all_cells(sparse_dataset.schema):
        assert original.predict(list(cell[:-1])) == bigger.predict(list(cell[:-1]))


def test_default_classifier_majority_and_ties():
    schema = make_schema([2, 2])
    seven_three = Dataset.from_rows(schema, [(0, 0)] * 7 + [(0, 1)] * 3)
    assert default_classifier(seven_three).sense == 0
    tie = Dataset.from_rows(schema, [(1, 1)] * 5 + [(0, 0)] * 5)
    assert default_classifier(tie).sense == 0
    minority_first = Dataset.from_rows(schema, [(0, 0)] * 2 + [(1, 1)] * 6)
    assert default_classifier(minority_first).sense == 1


def test_default_classifier_scores_the_modal_share_and_never_abstains(mixed_dataset):
    classifier = default_classifier(mixed_dataset)
    metrics = evaluate(classifier, mixed_dataset)
    senses = np.bincount(mixed_dataset.vectors[:, -1], weights=mixed_dataset.counts)
    assert metrics.accuracy == pytest.approx(senses.max() / mixed_dataset.N)
    assert metrics.recall == 1.0
    assert metrics.n_abstained == 0
    with pytest.raises(ClassifyError):
        classifier.predict([0])


def test_metrics_definitions():
    schema = make_schema([4, 2])
    test = Dataset.from_rows(schema, [(0, 0), (1, 1), (2, 0), (3, 1)])
    answers = {(0,): Prediction(0), (1,): Prediction(1), (2,): Prediction(1), (3,): ABSTAIN}
    metrics = evaluate(FixedPredictions(schema, answers), test)
    assert (metrics.accuracy, metrics.recall) == (0.5, 0.75)
    assert (metrics.n_test, metrics.n_correct, metrics.n_abstained) == (4, 2, 1)

    silent = {key: ABSTAIN for key in answers}
    metrics = evaluate(FixedPredictions(schema, silent), test)
    assert (metrics.accuracy, metrics.recall) == (0.0, 0.0)


def test_metrics_weight_repeated_instances():
    schema = make_schema([2, 2])
    test = Dataset.from_rows(schema, [(0, 0)] * 3 + [(1, 0)])
    metrics = evaluate(DefaultClassifier(schema, 0), test)
    assert metrics.n_test == 4 and metrics.accuracy == 1.0
    assert metrics.to_dict()["n_correct"] == 4


def test_evaluate_requires_matching_schemas(mixed_dataset, small_dataset):
    classifier = ModelClassifier(fit(small_dataset, boundary_graph(4, INDEPENDENCE)))
    with pytest.raises(ClassifyError):
        evaluate(classifier, mixed_dataset)
