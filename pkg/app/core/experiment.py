"""
Experiment driver: the search-direction x criterion matrix with baselines,
synthetic data generation and trace export
"""
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.chordal import ModelGraph, NotDecomposableError, decompose, format_notation, parse_notation
from app.core.classify import Metrics, ModelClassifier, default_classifier, evaluate, naive_bayes_classifier
from app.core.criteria import AIC, BIC, CHI2, EXACT, CriterionConfig
from app.core.estimate import DOF_CELLS, CliqueGenerator, fit, naive_bayes_graph, sample
from app.core.schema import Dataset, FeatureVariable, Schema, SchemaError, read_dataset, split
from app.core.search import BSS, FSS, SearchConfig, SearchResult, feature_report, select_model
from app.utils import format_cell, format_edge, format_fraction, format_value, render_table

logger = logging.getLogger(__name__)

DEFAULT_ROW = "default"
NAIVE_BAYES_ROW = "naive_bayes"
AVERAGE_ROW = "average"
NO_SEARCH = "none"
DIRECTION_ORDER = (BSS, FSS)

BEST_MARK = "*"
BELOW_DEFAULT_MARK = "!"

ProgressCallback = Callable[[int, int, str], None]


class ExperimentError(ValueError):
    """A failure inside one experiment cell"""

    def __init__(self, cell: str, cause: Exception):
        self.cell = cell
        self.cause = cause
        self.line = getattr(cause, "line", None)
        super().__init__(f"{cell}: {cause}")


@dataclass(frozen=True)
class CellRecord:
    """One row of the accuracy comparison: a selected model or a baseline"""

    dataset: str
    direction: str
    criterion: str
    metrics: Metrics
    complexity: Optional[int]
    notation: str
    retained: Tuple[str, ...] = ()
    dropped: Tuple[str, ...] = ()
    stop_reason: str = ""

    @property
    def accuracy(self) -> float:
        return self.metrics.accuracy

    @property
    def recall(self) -> float:
        return self.metrics.recall


@dataclass(frozen=True)
class Average:
    accuracy: float
    recall: float
    complexity: Optional[float]


@dataclass(frozen=True)
class ExperimentReport:
    datasets: Tuple[str, ...]
    criteria: Tuple[str, ...]
    records: Tuple[CellRecord, ...]
    sizes: Mapping[str, Tuple[int, int]] = field(default_factory=dict)
    settings: Mapping[str, object] = field(default_factory=dict)

    def record(self, dataset: str, direction: str, criterion: str) -> CellRecord:
        for r in self.records:
            if (r.dataset, r.direction, r.criterion) == (dataset, direction, criterion):
                return r
        raise KeyError((dataset, direction, criterion))

    def baseline(self, dataset: str, name: str) -> CellRecord:
        return self.record(dataset, NO_SEARCH, name)

    def columns(self) -> List[Tuple[str, str]]:
        """(direction, criterion) keys in report order, baselines first"""
        keys = [(NO_SEARCH, DEFAULT_ROW), (NO_SEARCH, NAIVE_BAYES_ROW)]
        keys += [(d, c) for d in DIRECTION_ORDER for c in self.criteria]
        return keys

    def averages(self) -> Dict[Tuple[str, str], Average]:
        """Arithmetic means over datasets for every column"""
        result = {}
        for direction, criterion in self.columns():
            rows = [self.record(name, direction, criterion) for name in self.datasets]
            complexities = [r.complexity for r in rows if r.complexity is not None]
            result[(direction, criterion)] = Average(
                accuracy=float(np.mean([r.accuracy for r in rows])),
                recall=float(np.mean([r.recall for r in rows])),
                complexity=float(np.mean(complexities)) if complexities else None,
            )
        return result

    def strategy_effect(self) -> Dict[str, Tuple[List[Tuple[str, float, float]], float]]:
        """Per criterion: (dataset, BSS accuracy, FSS accuracy) pairs and the mean |BSS - FSS|"""
        effect = {}
        for criterion in self.criteria:
            pairs = [(name, self.record(name, BSS, criterion).accuracy, self.record(name, FSS, criterion).accuracy)
                     for name in self.datasets]
            effect[criterion] = (pairs, float(np.mean([abs(b - f) for _, b, f in pairs])))
        return effect

    def to_dict(self) -> dict:
        return {
            "datasets": list(self.datasets),
            "criteria": list(self.criteria),
            "records": [
                {**asdict(r), "metrics": r.metrics.to_dict(), "retained": list(r.retained), "dropped": list(r.dropped)}
                for r in self.records
            ],
            "averages": [
                {"direction": d, "criterion": c, **asdict(avg)} for (d, c), avg in self.averages().items()
            ],
            "strategy_effect": {c: mean_diff for c, (_, mean_diff) in self.strategy_effect().items()},
            "settings": dict(self.settings),
        }

    def to_delimited(self, delimiter: str = ",") -> str:
        header = ["dataset", "direction", "criterion", "accuracy", "recall", "complexity",
                  "n_test", "n_abstained", "model", "retained", "dropped", "stop_reason"]
        lines = [delimiter.join(header)]
        for r in self.records:
            lines.append(delimiter.join([
                r.dataset, r.direction, r.criterion, f"{r.accuracy:.6f}", f"{r.recall:.6f}",
                "" if r.complexity is None else str(r.complexity),
                str(r.metrics.n_test), str(r.metrics.n_abstained), r.notation,
                " ".join(r.retained), " ".join(r.dropped), r.stop_reason,
            ]))
        for (direction, criterion), avg in self.averages().items():
            lines.append(delimiter.join([
                AVERAGE_ROW, direction, criterion, f"{avg.accuracy:.6f}", f"{avg.recall:.6f}",
                "" if avg.complexity is None else f"{avg.complexity:.2f}",
                "", "", "", "", "", "",
            ]))
        return "\n".join(lines) + "\n"

    def _marked_rows(self, label: str, lookup: Callable[[str, str], Tuple[float, Optional[float]]]) -> List[List[str]]:
        """Two table rows (BSS, FSS) for one dataset or the averages"""
        default_acc, _ = lookup(NO_SEARCH, DEFAULT_ROW)
        scored = [(NO_SEARCH, NAIVE_BAYES_ROW)] + [(d, c) for d in DIRECTION_ORDER for c in self.criteria]
        best = max(lookup(d, c)[0] for d, c in scored)

        def cell(direction: str, criterion: str) -> str:
            accuracy, complexity = lookup(direction, criterion)
            text = format_cell(accuracy, complexity)
            if accuracy == best:
                text += BEST_MARK
            if accuracy < default_acc:
                text += BELOW_DEFAULT_MARK
            return text

        rows = []
        for k, direction in enumerate(DIRECTION_ORDER):
            head = ([label, format_fraction(default_acc), cell(NO_SEARCH, NAIVE_BAYES_ROW)] if k == 0
                    else ["", "", ""])
            rows.append(head + [direction.upper()] + [cell(direction, c) for c in self.criteria])
        return rows

    def to_text(self) -> str:
        """Aligned accuracy table, strategy-effect summary and selected models"""
        header = ["", "default", "naive_bayes", "search"] + list(self.criteria)
        rows = [header]
        for name in self.datasets:
            rows += self._marked_rows(name, lambda d, c, n=name: (
                self.record(n, d, c).accuracy, self.record(n, d, c).complexity))
        averages = self.averages()
        rows += self._marked_rows(AVERAGE_ROW, lambda d, c: (averages[(d, c)].accuracy, averages[(d, c)].complexity))

        sections = [
            "Accuracy comparison (complexity in parentheses)",
            render_table(rows),
            f"{BEST_MARK} best accuracy for the dataset, {BELOW_DEFAULT_MARK} below the default classifier",
            "",
            "Search strategy effect (accuracy)",
        ]
        effect_rows = [["criterion", "dataset", "BSS", "FSS", "|BSS-FSS|"]]
        for criterion, (pairs, mean_diff) in self.strategy_effect().items():
            for name, bss, fss in pairs:
                effect_rows.append([criterion, name, format_fraction(bss), format_fraction(fss),
                                    format_fraction(abs(bss - fss))])
            effect_rows.append([criterion, "mean", "", "", format_fraction(mean_diff)])
        sections.append(render_table(effect_rows))

        for name in self.datasets:
            sections += ["", f"Models selected: {name}"]
            model_rows = [["criterion", "search", "model", "dropped"]]
            for criterion in self.criteria:
                for direction in DIRECTION_ORDER:
                    r = self.record(name, direction, criterion)
                    model_rows.append([criterion, direction.upper(), r.notation, " ".join(r.dropped)])
            nb = self.baseline(name, NAIVE_BAYES_ROW)
            model_rows.append([NAIVE_BAYES_ROW, NO_SEARCH, nb.notation, ""])
            sections.append(render_table(model_rows))
        return "\n".join(sections) + "\n"


def criterion_configs(alphas: Sequence[float], mc_replicates: int = 999, seed: int = 0,
                      literal_alpha_rule: bool = False, dof_mode: str = DOF_CELLS) -> List[CriterionConfig]:
    """chi2 cells for every alpha, then exact cells, then AIC and BIC"""
    alphas = list(dict.fromkeys(float(a) for a in alphas))
    if not alphas:
        raise ValueError("at least one alpha is required")
    common = dict(mc_replicates=mc_replicates, seed=seed, literal_alpha_rule=literal_alpha_rule, dof_mode=dof_mode)
    configs = [CriterionConfig(CHI2, alpha=a, **common) for a in alphas]
    configs += [CriterionConfig(EXACT, alpha=a, **common) for a in alphas]
    configs += [CriterionConfig(AIC, **common), CriterionConfig(BIC, **common)]
    return configs


def _dataset_names(paths: Sequence[Path]) -> List[str]:
    names, seen = [], {}
    for path in paths:
        stem = path.stem
        seen[stem] = seen.get(stem, 0) + 1
        names.append(stem if seen[stem] == 1 else f"{stem}_{seen[stem]}")
    return names


def _record(name: str, direction: str, criterion: str, train: Dataset, test: Dataset,
            result: SearchResult) -> CellRecord:
    schema = train.schema
    metrics = evaluate(ModelClassifier(fit(train, result.final_model)), test)
    features = feature_report(result, schema)
    return CellRecord(
        dataset=name,
        direction=direction,
        criterion=criterion,
        metrics=metrics,
        complexity=result.complexity,
        notation=format_notation(result.final_model, schema.names, last=schema.class_var.name),
        retained=features.retained,
        dropped=features.dropped,
        stop_reason=result.stop_reason,
    )


def run_experiment(data_paths: Union[str, Path, Iterable[Union[str, Path]]], class_column: str,
                   split_fraction: Union[Fraction, float, str] = Fraction(1, 11), seed: int = 0,
                   alphas: Sequence[float] = (0.0001,), mc_replicates: int = 999, delimiter: str = ",",
                   literal_alpha_rule: bool = False, dof_mode: str = DOF_CELLS, workers: int = 1,
                   progress: Optional[ProgressCallback] = None) -> ExperimentReport:
    """Split every dataset, run BSS and FSS under each criterion on the training
    share, and evaluate the selected models plus both baselines on the test share."""
    paths = [Path(data_paths)] if isinstance(data_paths, (str, Path)) else [Path(p) for p in data_paths]
    if not paths:
        raise ExperimentError("experiment", ValueError("no datasets given"))
    try:
        criteria = criterion_configs(alphas, mc_replicates, seed, literal_alpha_rule, dof_mode)
    except ValueError as e:
        raise ExperimentError("experiment", e) from e

    names = _dataset_names(paths)
    total = len(paths) * (2 + len(DIRECTION_ORDER) * len(criteria))
    done = 0
    records: List[CellRecord] = []
    sizes: Dict[str, Tuple[int, int]] = {}

    def tick(message: str):
        nonlocal done
        done += 1
        logger.info(f"[{done}/{total}] {message}")
        if progress:
            progress(done, total, message)

    for name, path in zip(names, paths):
        try:
            train, test = split(read_dataset(path, class_column, delimiter), split_fraction, seed)
        except (ValueError, OSError) as e:
            raise ExperimentError(f"{name}/ingest", e) from e
        sizes[name] = (train.N, test.N)
        schema = train.schema

        try:
            baseline = evaluate(default_classifier(train), test)
            records.append(CellRecord(name, NO_SEARCH, DEFAULT_ROW, baseline, None, ""))
            tick(f"{name} default: accuracy {baseline.accuracy:.4f}")
            nb_graph = naive_bayes_graph(schema)
            nb = evaluate(naive_bayes_classifier(train), test)
            records.append(CellRecord(
                name, NO_SEARCH, NAIVE_BAYES_ROW, nb, nb_graph.complexity,
                format_notation(nb_graph, schema.names, last=schema.class_var.name),
                retained=tuple(v.name for v in schema.features),
            ))
            tick(f"{name} naive_bayes: accuracy {nb.accuracy:.4f}")
        except ValueError as e:
            raise ExperimentError(f"{name}/baselines", e) from e

        for direction in DIRECTION_ORDER:
            for criterion in criteria:
                cell = f"{name}/{direction}/{criterion.label}"
                try:
                    result = select_model(train, SearchConfig(direction, criterion), workers=workers)
                    record = _record(name, direction, criterion.label, train, test, result)
                except ValueError as e:
                    raise ExperimentError(cell, e) from e
                records.append(record)
                tick(f"{cell}: accuracy {record.accuracy:.4f}, complexity {record.complexity}")

    settings = {
        "class_column": class_column,
        "split_fraction": str(split_fraction),
        "seed": seed,
        "alphas": [c.alpha for c in criteria if c.kind == CHI2],
        "mc_replicates": mc_replicates,
        "literal_alpha_rule": literal_alpha_rule,
        "dof_mode": dof_mode,
    }
    return ExperimentReport(tuple(names), tuple(c.label for c in criteria), tuple(records), sizes, settings)


LevelSpec = Union[str, Mapping[str, Union[int, Sequence[str]]]]


def parse_level_spec(spec: LevelSpec) -> List[FeatureVariable]:
    """``F1=2,F2=3,S=a/b/c``: a level count (labels 0..k-1) or slash-separated labels"""
    if isinstance(spec, str):
        entries = {}
        for part in filter(None, (p.strip() for p in spec.split(","))):
            name, sep, value = part.partition("=")
            if not sep or not name.strip() or not value.strip():
                raise SchemaError(f"bad level spec entry {part!r}; expected NAME=K or NAME=a/b")
            value = value.strip()
            entries[name.strip()] = int(value) if value.isdigit() else value.split("/")
        spec = entries
    variables = []
    for name, value in spec.items():
        if isinstance(value, int):
            if value < 1:
                raise SchemaError(f"variable {name!r} needs at least one level")
            levels = tuple(str(k) for k in range(value))
        else:
            levels = tuple(str(v).strip() for v in value)
        variables.append(FeatureVariable(name, levels))
    if not variables:
        raise SchemaError("level spec names no variables")
    return variables


def _clique_weights(tables: Mapping[str, Sequence[float]], schema: Schema) -> Dict[Tuple[int, ...], Sequence[float]]:
    """Keys like ``"F2 F3 S"`` become sorted index tuples"""
    weights = {}
    for key, values in tables.items():
        positions = tuple(sorted(schema.position(name) for name in key.split()))
        weights[positions] = values
    return weights


def gen_synthetic(model_notation: str, level_spec: LevelSpec, n: int, seed: int = 0,
                  tables: Optional[Mapping[str, Sequence[float]]] = None,
                  class_column: Optional[str] = None) -> Tuple[Dataset, ModelGraph]:
    """Sample ``n`` instances from a decomposable model.

    Clique weight tables are listed row-major over the clique's variables in
    schema order and are normalized per separator cell; cliques without a
    table get uniform random weights. The class variable is ``class_column``
    or else the last variable of the level spec.
    """
    variables = parse_level_spec(level_spec)
    names = [v.name for v in variables]
    class_name = class_column or names[-1]
    if class_name not in names:
        raise SchemaError(f"class column {class_name!r} not in the level spec")
    schema = Schema(tuple(v for v in variables if v.name != class_name), variables[names.index(class_name)])
    graph = parse_notation(model_notation, schema.names)
    try:
        cliques = set(decompose(graph).cliques)
    except NotDecomposableError as e:
        raise NotDecomposableError(f"{model_notation} is not decomposable") from e

    rng = np.random.default_rng(seed)
    weights = _clique_weights(tables, schema) if tables else None
    if weights and not set(weights) <= cliques:
        raise SchemaError(f"weight tables must name maximal cliques of {model_notation}")
    generator = CliqueGenerator.from_weights(schema, graph, rng, weights)
    dataset = sample(generator, n, rng)
    logger.info(f"Generated {n} rows from {format_notation(graph, schema.names, last=class_name)}")
    return dataset, graph


def export_trace(result: SearchResult, schema: Schema, delimiter: str = ",") -> str:
    """One row per model on the selection path: the data behind accuracy-vs-complexity plots"""
    header = ["level", "edge", "criterion_value", "delta_g2", "delta_dof", "accuracy", "recall", "model"]
    lines = [delimiter.join(header)]
    for step in result.path:
        lines.append(delimiter.join([
            str(step.level),
            format_edge(step.chosen_edge, schema.names),
            format_value(step.criterion_value),
            "" if step.delta is None else f"{step.delta.delta_g2:.6f}",
            "" if step.delta is None else str(step.delta.delta_dof),
            "" if step.accuracy is None else f"{step.accuracy:.6f}",
            "" if step.recall is None else f"{step.recall:.6f}",
            format_notation(step.chosen_model, schema.names, last=schema.class_var.name),
        ]))
    return "\n".join(lines) + "\n"


def describe_result(result: SearchResult, schema: Schema) -> dict:
    """JSON-ready summary of a search: final model, features, metrics and full trace"""
    names, last = schema.names, schema.class_var.name
    features = feature_report(result, schema)
    final = result.final_metrics
    return {
        "direction": result.config.direction,
        "criterion": result.config.criterion.label,
        "model": format_notation(result.final_model, names, last=last),
        "complexity": result.complexity,
        "stop_reason": result.stop_reason,
        "retained": list(features.retained),
        "dropped": list(features.dropped),
        "metrics": final.to_dict() if final else None,
        "trace": [
            {
                "level": step.level,
                "edge": format_edge(step.chosen_edge, names) or None,
                "criterion_value": step.criterion_value,
                "accepted": step.accepted,
                "candidates_evaluated": step.candidates_evaluated,
                "delta_g2": step.delta.delta_g2 if step.delta else None,
                "delta_dof": step.delta.delta_dof if step.delta else None,
                "accuracy": step.accuracy,
                "recall": step.recall,
                "model": format_notation(step.chosen_model, names, last=last),
            }
            for step in result.trace
        ],
    }


def evaluate_model_spec(train: Dataset, test: Dataset, spec: str) -> Tuple[Metrics, str, Optional[int]]:
    """Evaluate ``default``, ``naive_bayes`` or a model notation fitted on ``train``.

    Returns the metrics, the model notation (empty for the default
    classifier) and its complexity.
    """
    schema = train.schema
    if spec == DEFAULT_ROW:
        return evaluate(default_classifier(train), test), "", None
    graph = naive_bayes_graph(schema) if spec == NAIVE_BAYES_ROW else parse_notation(spec, schema.names)
    metrics = evaluate(ModelClassifier(fit(train, graph)), test)
    return metrics, format_notation(graph, schema.names, last=schema.class_var.name), graph.complexity
