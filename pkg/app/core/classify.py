"""
Sense classifiers built on fitted models, the majority baseline, and accuracy/recall
"""
import logging
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from app.core.estimate import FittedModel, fit, joint_probability, naive_bayes_graph
from app.core.schema import Dataset, Schema

logger = logging.getLogger(__name__)


class ClassifyError(ValueError):
    """Classifier and data do not fit together"""


@dataclass(frozen=True)
class Prediction:
    """A sense index, or None when the classifier abstains"""

    sense: Optional[int]

    @property
    def abstained(self) -> bool:
        return self.sense is None


ABSTAIN = Prediction(None)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float
    n_test: int
    n_correct: int
    n_abstained: int

    def to_dict(self) -> dict:
        return asdict(self)


class ModelClassifier:
    """Predicts the sense maximizing the fitted joint probability of (context, sense)"""

    def __init__(self, model: FittedModel):
        self.model = model
        self.schema = model.schema

    def _encode(self, context: Sequence[Union[int, str]]) -> Optional[list]:
        features = self.schema.features
        if len(context) != len(features):
            raise ClassifyError(f"context has {len(context)} values, expected {len(features)}")
        encoded = []
        for var, value in zip(features, context):
            index = var.index_of(value) if isinstance(value, str) else int(value)
            if index is None or not 0 <= index < var.cardinality:
                logger.warning(f"Unseen level {value!r} for {var.name}; abstaining")
                return None
            encoded.append(index)
        return encoded

    def predict(self, context: Sequence[Union[int, str]]) -> Prediction:
        """Context holds feature level indices or labels, class excluded"""
        encoded = self._encode(context)
        if encoded is None:
            return ABSTAIN
        scores = [joint_probability(self.model, encoded + [s])
                  for s in range(self.schema.class_var.cardinality)]
        best = int(np.argmax(scores))
        if scores[best] <= 0:
            return ABSTAIN
        return Prediction(best)


class DefaultClassifier:
    """Assigns every instance the most frequent training sense"""

    def __init__(self, schema: Schema, sense: int):
        self.schema = schema
        self.sense = sense

    def predict(self, context: Sequence[Union[int, str]]) -> Prediction:
        if len(context) != len(self.schema.features):
            raise ClassifyError(f"context has {len(context)} values, expected {len(self.schema.features)}")
        return Prediction(self.sense)


Classifier = Union[ModelClassifier, DefaultClassifier]


def default_classifier(train: Dataset) -> DefaultClassifier:
    """Majority baseline; ties go to the lowest sense index"""
    schema = train.schema
    totals = np.bincount(train.vectors[:, schema.class_index], weights=train.counts,
                         minlength=schema.class_var.cardinality)
    return DefaultClassifier(schema, int(np.argmax(totals)))


def naive_bayes_classifier(train: Dataset) -> ModelClassifier:
    return ModelClassifier(fit(train, naive_bayes_graph(train.schema)))


def evaluate(classifier: Classifier, test: Dataset) -> Metrics:
    """Accuracy counts abstentions as wrong; recall is the share not abstained"""
    if classifier.schema != test.schema:
        raise ClassifyError("classifier and test set use different schemas")
    n_test = test.N
    if n_test == 0:
        raise ClassifyError("test set is empty")
    correct = abstained = 0
    for vector, count in test.rows():
        prediction = classifier.predict(vector[:-1])
        if prediction.abstained:
            abstained += count
        elif prediction.sense == vector[-1]:
            correct += count
    return Metrics(
        accuracy=correct / n_test,
        recall=(n_test - abstained) / n_test,
        n_test=n_test,
        n_correct=correct,
        n_abstained=abstained,
    )
