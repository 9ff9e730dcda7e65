"""
Closed-form estimation of decomposable models from marginal frequencies
"""
import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.chordal import (
    Decomposition,
    ModelGraph,
    NotDecomposableError,
    decompose,
)
from app.core.schema import Dataset, Schema

logger = logging.getLogger(__name__)

Cell = Tuple[int, ...]

DOF_CELLS = "cells"
DOF_JOINT = "joint"


class FitError(ValueError):
    """A model cannot be fitted to the dataset"""


@dataclass(frozen=True)
class MarginalTable:
    """Sparse observed counts over a set of variables (only positive cells stored)"""

    variables: Tuple[int, ...]
    counts: Mapping[Cell, int]
    total: int

    @property
    def nonzero(self) -> int:
        return len(self.counts)

    def get(self, cell: Cell) -> int:
        return self.counts.get(cell, 0)

    def project(self, instance: Sequence[int]) -> Cell:
        return tuple(int(instance[v]) for v in self.variables)

    def marginalize(self, variables: Sequence[int]) -> "MarginalTable":
        """Sum out everything not in ``variables`` (a subset of this table's)"""
        keep = tuple(sorted(variables))
        positions = [self.variables.index(v) for v in keep]
        summed: Dict[Cell, int] = {}
        for cell, count in self.counts.items():
            key = tuple(cell[p] for p in positions)
            summed[key] = summed.get(key, 0) + count
        return MarginalTable(keep, summed, self.total)


def marginal_table(dataset: Dataset, variables: Sequence[int]) -> MarginalTable:
    """Tally the observed marginal of ``variables``"""
    variables = tuple(sorted(variables))
    if not variables:
        return MarginalTable((), {(): dataset.N}, dataset.N)
    cells, inverse = np.unique(dataset.vectors[:, variables], axis=0, return_inverse=True)
    totals = np.zeros(len(cells), dtype=np.int64)
    np.add.at(totals, inverse.reshape(-1), dataset.counts)
    counts = {tuple(int(v) for v in cell): int(t) for cell, t in zip(cells, totals)}
    return MarginalTable(variables, counts, dataset.N)


@dataclass(frozen=True)
class FittedModel:
    """A decomposable model with its clique and separator marginals"""

    graph: ModelGraph
    decomposition: Decomposition
    clique_tables: Tuple[MarginalTable, ...]
    separator_tables: Tuple[MarginalTable, ...]
    N: int
    schema: Schema


def fit(dataset: Dataset, graph: ModelGraph) -> FittedModel:
    """Maximum likelihood fit: tally clique and separator marginals, no smoothing"""
    if graph.n != dataset.schema.n:
        raise FitError(f"graph has {graph.n} variables but the schema has {dataset.schema.n}")
    try:
        decomposition = decompose(graph)
    except NotDecomposableError as e:
        raise FitError(str(e)) from e
    cliques = tuple(marginal_table(dataset, c) for c in decomposition.cliques)
    separators = tuple(marginal_table(dataset, s) for s in decomposition.separators)
    return FittedModel(graph, decomposition, cliques, separators, dataset.N, dataset.schema)


def joint_probability(model: FittedModel, instance: Sequence[int]) -> float:
    """Normalized product of clique marginals over separator marginals"""
    numerator = 1
    for table in model.clique_tables:
        count = table.get(table.project(instance))
        if count == 0:
            return 0.0
        numerator *= count
    denominator = 1
    for table in model.separator_tables:
        # positive clique cells imply positive separator cells
        denominator *= table.get(table.project(instance))
    scale = len(model.separator_tables) - len(model.clique_tables)
    return numerator / denominator * float(model.N) ** scale


def log_expected_counts(model: FittedModel, vectors: np.ndarray) -> np.ndarray:
    """log(N * joint_probability) per row; -inf where the fitted probability is 0"""
    logs = np.zeros(len(vectors))
    for table in model.clique_tables:
        counts = np.array([table.get(table.project(row)) for row in vectors], dtype=float)
        with np.errstate(divide="ignore"):
            logs += np.log(counts)
    for table in model.separator_tables:
        counts = np.array([table.get(table.project(row)) for row in vectors], dtype=float)
        with np.errstate(divide="ignore"):
            logs -= np.log(counts)
    scale = len(model.separator_tables) - len(model.clique_tables) + 1
    logs += scale * math.log(model.N)
    return np.where(np.isnan(logs), -np.inf, logs)


def _support_size(model: FittedModel) -> int:
    """Number of joint cells with a positive fitted probability.

    Counted by passing messages from the last clique back to the first over
    the running-intersection tree, so no joint table is ever enumerated.
    """
    decomposition = model.decomposition
    k = len(decomposition.cliques)
    messages: Dict[int, Tuple[Tuple[int, ...], Dict[Cell, int]]] = {}
    children: Dict[int, list] = {j: [] for j in range(k)}
    total = 1
    for j in range(1, k):
        parent = decomposition.parent(j)
        if parent is not None:
            children[parent].append(j)

    for j in reversed(range(k)):
        table = model.clique_tables[j]
        separator = decomposition.separators[j - 1] if j > 0 else ()
        sep_positions = [table.variables.index(v) for v in separator]
        outgoing: Dict[Cell, int] = {}
        for cell in table.counts:
            weight = 1
            for child in children[j]:
                child_sep, child_message = messages[child]
                key = tuple(cell[table.variables.index(v)] for v in child_sep)
                weight *= child_message.get(key, 0)
                if weight == 0:
                    break
            key = tuple(cell[p] for p in sep_positions)
            outgoing[key] = outgoing.get(key, 0) + weight
        if separator:
            messages[j] = (separator, outgoing)
        else:
            total *= outgoing.get((), 0)
    return total


def adjusted_dof(model: FittedModel, mode: str = DOF_CELLS) -> int:
    """Parameters with non-zero estimates.

    ``cells``: positive clique cells minus positive separator cells.
    ``joint``: positive cells of the fitted joint distribution.
    """
    if mode == DOF_CELLS:
        dof = sum(t.nonzero for t in model.clique_tables) - sum(t.nonzero for t in model.separator_tables)
        return max(dof, 0)
    if mode == DOF_JOINT:
        return _support_size(model)
    raise ValueError(f"unknown dof mode {mode!r}")


def naive_bayes_graph(schema: Schema) -> ModelGraph:
    """Every feature joined to the class variable, nothing else"""
    c = schema.class_index
    return ModelGraph(schema.n, frozenset((i, c) for i in range(len(schema.features))))


@dataclass(frozen=True)
class CliqueGenerator:
    """A decomposable distribution given by clique weight tables.

    Clique j's weights are normalized within each of its separator cells, so
    each table acts as the conditional of the clique's new variables given
    the separator. Fitted models plug in their observed counts.
    """

    schema: Schema
    graph: ModelGraph
    decomposition: Decomposition
    tables: Tuple[Mapping[Cell, float], ...]

    @classmethod
    def from_fitted(cls, model: FittedModel) -> "CliqueGenerator":
        tables = tuple({cell: float(c) for cell, c in t.counts.items()} for t in model.clique_tables)
        return cls(model.schema, model.graph, model.decomposition, tables)

    @classmethod
    def from_weights(cls, schema: Schema, graph: ModelGraph, rng: np.random.Generator,
                     weights: Optional[Mapping[Tuple[int, ...], Sequence[float]]] = None) -> "CliqueGenerator":
        """Weights per clique (row-major over the clique's sorted variables);
        cliques without given weights draw them uniformly at random."""
        decomposition = decompose(graph)
        weights = weights or {}
        cardinalities = schema.cardinalities
        tables = []
        for clique in decomposition.cliques:
            cells = list(product(*(range(cardinalities[v]) for v in clique)))
            given = weights.get(tuple(clique))
            if given is None:
                values = rng.uniform(size=len(cells))
            else:
                values = np.asarray(given, dtype=float)
                if values.shape != (len(cells),) or (values < 0).any():
                    raise FitError(f"clique {clique} needs {len(cells)} non-negative weights")
            tables.append({cell: float(w) for cell, w in zip(cells, values) if w > 0})
        return cls(schema, graph, decomposition, tuple(tables))


def _conditionals(table: Mapping[Cell, float], variables: Tuple[int, ...], separator: Tuple[int, ...]):
    positions = [variables.index(v) for v in separator]
    grouped: Dict[Cell, list] = {}
    for cell in sorted(table):
        grouped.setdefault(tuple(cell[p] for p in positions), []).append(cell)
    result = {}
    for key, cells in grouped.items():
        w = np.array([table[c] for c in cells])
        result[key] = (np.array(cells, dtype=np.int64), w / w.sum())
    return result


def sample(source: Union[FittedModel, CliqueGenerator], size: int, rng: np.random.Generator) -> Dataset:
    """Draw ``size`` instances, clique by clique in running-intersection order"""
    if size < 1:
        raise FitError(f"sample size must be positive, got {size}")
    generator = CliqueGenerator.from_fitted(source) if isinstance(source, FittedModel) else source
    decomposition = generator.decomposition
    rows = np.zeros((size, generator.schema.n), dtype=np.int64)
    for j, clique in enumerate(decomposition.cliques):
        separator = decomposition.separators[j - 1] if j > 0 else ()
        conditionals = _conditionals(generator.tables[j], clique, separator)
        if separator:
            keys, inverse = np.unique(rows[:, separator], axis=0, return_inverse=True)
            inverse = inverse.reshape(-1)
        else:
            keys, inverse = np.zeros((1, 0), dtype=np.int64), np.zeros(size, dtype=np.int64)
        for g, key in enumerate(keys):
            members = np.flatnonzero(inverse == g)
            key = tuple(int(v) for v in key)
            if key not in conditionals:
                raise FitError(f"clique {clique} has no positive weight for separator cell {key}")
            cells, probs = conditionals[key]
            drawn = rng.choice(len(cells), size=len(members), p=probs)
            rows[np.ix_(members, clique)] = cells[drawn]
    return Dataset.from_rows(generator.schema, rows)
