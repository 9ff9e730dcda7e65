#!/usr/bin/env python3
"""
Test closed-form estimation, adjusted degrees of freedom and sampling
"""
from itertools import combinations

import numpy as np
import pytest

from app.core.chordal import INDEPENDENCE, SATURATED, ModelGraph, boundary_graph, format_notation, is_decomposable
from app.core.estimate import (
    DOF_CELLS,
    DOF_JOINT,
    CliqueGenerator,
    FitError,
    adjusted_dof,
    fit,
    joint_probability,
    log_expected_counts,
    marginal_table,
    naive_bayes_graph,
    sample,
)
from app.core.schema import Dataset
from conftest import all_cells, graph, make_schema, random_dataset


def dense_counts(dataset):
    table = np.zeros(dataset.schema.cardinalities)
    np.add.at(table, tuple(dataset.vectors.T), dataset.counts)
    return table


def ipf_fixed_point(dataset, cliques, sweeps=200):
    """Iterative proportional fitting of the clique marginals on the full joint table"""
    observed = dense_counts(dataset) / dataset.N
    joint = np.full(observed.shape, 1.0 / observed.size)
    axes = range(observed.ndim)
    for _ in range(sweeps):
        previous = joint.copy()
        for clique in cliques:
            other = tuple(a for a in axes if a not in clique)
            target = observed.sum(axis=other, keepdims=True)
            current = joint.sum(axis=other, keepdims=True)
            joint = joint * np.divide(target, current, out=np.zeros_like(target), where=current > 0)
        if np.abs(joint - previous).max() < 1e-15:
            break
    return joint


def random_decomposable_graphs(rng, count, max_n=4):
    found = []
    while len(found) < count:
        n = int(rng.integers(2, max_n + 1))
        pairs = list(combinations(range(n), 2))
        g = ModelGraph(n, frozenset(p for p in pairs if rng.random() < 0.5))
        if is_decomposable(g):
            found.append(g)
    return found


@pytest.fixture
def estimation_suite():
    rng = np.random.default_rng(2024)
    suite = []
    for g in random_decomposable_graphs(rng, 50):
        schema = make_schema([int(k) for k in rng.integers(2, 4, size=g.n)])
        cells = all_cells(schema)
        dataset = Dataset.from_rows(schema, cells, counts=rng.integers(1, 20, size=len(cells)))
        suite.append((dataset, g))
    return suite


def test_closed_form_worked_example():
    schema = make_schema([2, 2, 2, 2])
    rows = [(0, 0, 0, 0)] * 10 + [(0, 1, 1, 0)] * 10 + [(1, 1, 0, 0)] * 20 + [(1, 1, 1, 1)] * 60
    dataset = Dataset.from_rows(schema, rows)
    model = fit(dataset, graph(4, (0, 3), (1, 3), (2, 3), (1, 2)))
    assert joint_probability(model, (0, 0, 0, 0)) == pytest.approx(0.05, abs=1e-12)


def test_saturated_model_returns_relative_frequencies(mixed_dataset):
    model = fit(mixed_dataset, boundary_graph(4, SATURATED))
    assert len(model.clique_tables) == 1
    for instance, count in mixed_dataset.rows():
        assert joint_probability(model, instance) == pytest.approx(count / mixed_dataset.N, abs=1e-12)


def test_independence_fits_single_variable_tables(small_dataset):
    model = fit(small_dataset, boundary_graph(4, INDEPENDENCE))
    assert [t.variables for t in model.clique_tables] == [(0,), (1,), (2,), (3,)]
    assert all(t.variables == () for t in model.separator_tables)


def test_separator_matches_both_clique_marginals(mixed_dataset):
    model = fit(mixed_dataset, graph(4, (0, 3), (1, 3), (2, 3), (1, 2)))
    (separator,) = model.separator_tables
    assert separator.variables == (3,)
    for clique in model.clique_tables:
        assert clique.marginalize([3]).counts == separator.counts


def test_marginal_table_counts(small_dataset):
    table = marginal_table(small_dataset, [2, 0])
    assert table.variables == (0, 2)
    assert sum(table.counts.values()) == small_dataset.N
    dense = dense_counts(small_dataset).sum(axis=(1, 3))
    for (a, b), count in table.counts.items():
        assert dense[a, b] == count


def test_fit_rejects_bad_graphs(small_dataset):
    with pytest.raises(FitError):
        fit(small_dataset, graph(4, (0, 1), (1, 2), (2, 3), (0, 3)))
    with pytest.raises(FitError):
        fit(small_dataset, boundary_graph(3, SATURATED))


def test_closed_form_equals_ipf_fixed_point(estimation_suite):
    for dataset, g in estimation_suite:
        model = fit(dataset, g)
        expected = ipf_fixed_point(dataset, [c for c in model.decomposition.cliques])
        got = np.zeros(dataset.schema.cardinalities)
        for cell in all_cells(dataset.schema):
            got[cell] = joint_probability(model, cell)
        assert np.abs(got - expected).max() < 1e-9, format_notation(g, dataset.schema.names)

        observed = dense_counts(dataset) / dataset.N
        for clique in model.decomposition.cliques:
            other = tuple(a for a in range(g.n) if a not in clique)
            assert np.abs(got.sum(axis=other) - observed.sum(axis=other)).max() < 1e-12


def test_joint_probability_sums_to_one(estimation_suite):
    for dataset, g in estimation_suite:
        model = fit(dataset, g)
        total = sum(joint_probability(model, cell) for cell in all_cells(dataset.schema))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_sums_to_one_on_sparse_data(sparse_dataset):
    for g in [graph(4, (0, 3), (1, 3), (2, 3), (1, 2)), graph(4, (0, 1), (2, 3)), boundary_graph(4, INDEPENDENCE)]:
        model = fit(sparse_dataset, g)
        total = sum(joint_probability(model, cell) for cell in all_cells(sparse_dataset.schema))
        assert total == pytest.approx(1.0, abs=1e-10)


def test_log_expected_counts_match_joint_probability(sparse_dataset):
    model = fit(sparse_dataset, graph(4, (0, 3), (1, 3), (2, 3), (1, 2)))
    cells = np.array(all_cells(sparse_dataset.schema))
    logs = log_expected_counts(model, cells)
    for cell, value in zip(cells, logs):
        p = joint_probability(model, cell)
        if p == 0:
            assert value == -np.inf
        else:
            assert value == pytest.approx(np.log(sparse_dataset.N * p), abs=1e-10)


def test_adjusted_dof_examples():
    schema = make_schema([2, 2])
    dataset = Dataset.from_rows(schema, all_cells(schema))
    assert adjusted_dof(fit(dataset, graph(2, (0, 1)))) == 4

    schema = make_schema([2, 2, 2])
    dataset = Dataset.from_rows(schema, all_cells(schema))
    model = fit(dataset, graph(3, (0, 2), (1, 2)))
    assert adjusted_dof(model) == 6
    assert adjusted_dof(model, DOF_JOINT) == 8


def test_saturated_dof_counts_distinct_vectors(sparse_dataset):
    model = fit(sparse_dataset, boundary_graph(4, SATURATED))
    assert adjusted_dof(model) == len(sparse_dataset.vectors)
    assert adjusted_dof(model, DOF_JOINT) == len(sparse_dataset.vectors)


def test_joint_dof_counts_positive_cells(sparse_dataset):
    rng = np.random.default_rng(8)
    for g in random_decomposable_graphs(rng, 30):
        if g.n != 4:
            continue
        model = fit(sparse_dataset, g)
        positive = sum(joint_probability(model, cell) > 0 for cell in all_cells(sparse_dataset.schema))
        assert adjusted_dof(model, DOF_JOINT) == positive
        assert adjusted_dof(model, DOF_CELLS) >= 0


@pytest.mark.parametrize("mode", [DOF_CELLS, DOF_JOINT])
def test_adjusted_dof_never_drops_as_observations_arrive(mode):
    schema = make_schema([3, 2, 4, 3])
    rows = random_dataset(schema, 200, seed=21).expand()[np.random.default_rng(21).permutation(200)]
    graphs = [g for g in random_decomposable_graphs(np.random.default_rng(5), 40) if g.n == 4][:8]
    graphs += [boundary_graph(4, SATURATED), boundary_graph(4, INDEPENDENCE)]
    for g in graphs:
        previous = 0
        for k in range(1, len(rows) + 1):
            dof = adjusted_dof(fit(Dataset.from_rows(schema, rows[:k]), g), mode)
            assert dof >= previous
            previous = dof


def test_unknown_dof_mode(small_dataset):
    with pytest.raises(ValueError):
        adjusted_dof(fit(small_dataset, boundary_graph(4, SATURATED)), "bogus")


def test_naive_bayes_graph():
    schema = make_schema([25, 25, 25, 25, 2, 2, 2, 2, 6],
                         names=["C1", "C2", "C3", "E", "L1", "L2", "R1", "R2", "S"])
    g = naive_bayes_graph(schema)
    assert g.complexity == 8
    assert format_notation(g, schema.names, last="S") == "(C1 S)(C2 S)(C3 S)(E S)(L1 S)(L2 S)(R1 S)(R2 S)"
    assert naive_bayes_graph(make_schema([3])).complexity == 0


def test_sampling_reproduces_fitted_clique_marginals(mixed_dataset):
    model = fit(mixed_dataset, graph(4, (0, 3), (1, 3), (2, 3), (1, 2)))
    drawn = sample(model, 40000, np.random.default_rng(1))
    assert drawn.N == 40000
    refit = fit(drawn, model.graph)
    for original, resampled in zip(model.clique_tables, refit.clique_tables):
        for cell, count in original.counts.items():
            assert resampled.get(cell) / drawn.N == pytest.approx(count / model.N, abs=0.01)
    # cells with zero fitted weight are never drawn
    assert set(refit.clique_tables[0].counts) <= set(model.clique_tables[0].counts)


def test_sampling_is_deterministic(mixed_dataset):
    model = fit(mixed_dataset, graph(4, (0, 3), (1, 3)))
    first = sample(model, 500, np.random.default_rng(9))
    second = sample(model, 500, np.random.default_rng(9))
    assert first.same_multiset(second)


def test_from_weights_uses_given_tables():
    schema = make_schema([2, 2, 2])
    g = graph(3, (0, 1), (1, 2))
    weights = {(0, 1): [1, 0, 0, 3], (1, 2): [1, 1, 0, 1]}
    generator = CliqueGenerator.from_weights(schema, g, np.random.default_rng(0), weights)
    drawn = sample(generator, 2000, np.random.default_rng(0))
    allowed = {(0, 0, 0), (0, 0, 1), (1, 1, 1)}
    assert {tuple(v) for v in drawn.vectors.tolist()} <= allowed
    share = drawn.count((1, 1, 1)) / drawn.N
    assert share == pytest.approx(0.75, abs=0.05)


def test_from_weights_validates_tables():
    schema = make_schema([2, 2, 2])
    g = graph(3, (0, 1), (1, 2))
    with pytest.raises(FitError):
        CliqueGenerator.from_weights(schema, g, np.random.default_rng(0), {(0, 1): [1, 1, 1]})
    with pytest.raises(FitError):
        CliqueGenerator.from_weights(schema, g, np.random.default_rng(0), {(0, 1): [1, -1, 1, 1]})


def test_sampling_reports_unreachable_separator_cells():
    schema = make_schema([2, 2, 2])
    g = graph(3, (0, 1), (1, 2))
    generator = CliqueGenerator.from_weights(schema, g, np.random.default_rng(0),
                                             {(0, 1): [1, 1, 1, 1], (1, 2): [1, 1, 0, 0]})
    with pytest.raises(FitError):
        sample(generator, 200, np.random.default_rng(0))
    with pytest.raises(FitError):
        sample(generator, 0, np.random.default_rng(0))


def test_scaling_multiplicities_keeps_probabilities(mixed_dataset):
    scaled = Dataset.from_rows(mixed_dataset.schema, mixed_dataset.vectors, counts=mixed_dataset.counts * 3)
    g = graph(4, (0, 3), (1, 3), (2, 3), (1, 2))
    original, tripled = fit(mixed_dataset, g), fit(scaled, g)
    for cell in all_cells(mixed_dataset.schema):
        assert joint_probability(tripled, cell) == pytest.approx(joint_probability(original, cell), abs=1e-12)
