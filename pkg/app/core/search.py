"""
Forward (FSS) and backward (BSS) sequential search over decomposable models
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, FrozenSet, List, Optional, Tuple

import numpy as np

from app.core.chordal import (
    ADD,
    INDEPENDENCE,
    REMOVE,
    SATURATED,
    Edge,
    ModelGraph,
    boundary_graph,
    class_neighbors,
    enumerate_neighbors,
)
from app.core.classify import Metrics, ModelClassifier, evaluate
from app.core.criteria import (
    CHI2,
    CriterionConfig,
    CriterionError,
    DeltaStats,
    chi2_significance,
    delta_statistics,
    edge_delta,
    exact_conditional_significance,
    information_criterion,
)
from app.core.estimate import DOF_CELLS, fit
from app.core.schema import Dataset, Schema

logger = logging.getLogger(__name__)

FSS = "fss"
BSS = "bss"
DIRECTIONS = (FSS, BSS)

STOP_CRITERION = "criterion"
STOP_NO_CANDIDATES = "no_candidates"
STOP_MAX_STEPS = "max_steps"
STOP_BOUNDARY = "boundary"


@dataclass(frozen=True)
class SearchConfig:
    direction: str
    criterion: CriterionConfig
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise CriterionError(f"unknown direction {self.direction!r}; expected fss or bss")
        if self.max_steps is not None and self.max_steps < 0:
            raise CriterionError(f"max_steps must be non-negative, got {self.max_steps}")

    @property
    def label(self) -> str:
        return f"{self.direction}/{self.criterion.label}"


@dataclass(frozen=True)
class SearchStep:
    """One level of the search.

    The first step holds the boundary model (no edge, no criterion value).
    A final step with ``accepted=False`` is the best candidate the
    criterion turned down.
    """

    level: int
    chosen_edge: Optional[Edge]
    chosen_model: ModelGraph
    criterion_value: Optional[float]
    candidates_evaluated: int
    accepted: bool = True
    delta: Optional[DeltaStats] = None
    metrics: Optional[Metrics] = None

    @property
    def accuracy(self) -> Optional[float]:
        return self.metrics.accuracy if self.metrics else None

    @property
    def recall(self) -> Optional[float]:
        return self.metrics.recall if self.metrics else None


@dataclass(frozen=True)
class SearchResult:
    final_model: ModelGraph
    trace: Tuple[SearchStep, ...]
    selected_features: FrozenSet[int]
    stop_reason: str
    config: SearchConfig

    @property
    def path(self) -> Tuple[SearchStep, ...]:
        """Boundary model plus accepted steps, ending at the final model"""
        return tuple(step for step in self.trace if step.accepted)

    @property
    def complexity(self) -> int:
        return self.final_model.complexity

    @property
    def final_metrics(self) -> Optional[Metrics]:
        return self.path[-1].metrics


@dataclass(frozen=True)
class FeatureReport:
    retained: Tuple[str, ...]
    dropped: Tuple[str, ...]


@dataclass(frozen=True)
class _Candidate:
    edge: Edge
    model: ModelGraph
    delta: DeltaStats
    value: float
    accepted: bool = field(default=False)


def _accepts(config: SearchConfig, value: float) -> bool:
    criterion = config.criterion
    if not criterion.is_significance:
        # ties at zero keep the simpler model
        return value <= 0 if config.direction == BSS else value > 0
    significant = value < criterion.alpha
    if criterion.literal_alpha_rule:
        significant = not significant
    return not significant if config.direction == BSS else significant


def _rank(config: SearchConfig) -> Callable[[_Candidate], tuple]:
    """Sort key whose minimum is the preferred candidate.

    Equal criterion values (p-values floored at 1/(R+1) or underflowing to 0)
    fall back to the larger dG2 for FSS and the smaller one for BSS, then to
    edge order.
    """
    if config.criterion.is_significance:
        # BSS drops the least significant edge, FSS adds the most significant one
        sign = -1.0 if config.direction == BSS else 1.0
    else:
        sign = 1.0 if config.direction == BSS else -1.0
    fit_sign = 1.0 if config.direction == BSS else -1.0
    return lambda c: (sign * c.value, fit_sign * round(c.delta.delta_g2, 9), c.edge)


def _score(dataset: Dataset, config: SearchConfig, current: ModelGraph, level: int,
           edge: Edge, candidate: ModelGraph) -> _Candidate:
    criterion = config.criterion
    simpler, complex_ = (candidate, current) if config.direction == BSS else (current, candidate)
    if criterion.dof_mode == DOF_CELLS:
        delta = edge_delta(dataset, complex_, edge)
    else:
        delta = delta_statistics(dataset, fit(dataset, simpler), fit(dataset, complex_), criterion.dof_mode)

    if not criterion.is_significance:
        value = information_criterion(delta, criterion.kappa(dataset.N))
    elif criterion.kind == CHI2:
        value = chi2_significance(delta)
    else:
        stream = np.random.SeedSequence([criterion.seed, level, *edge])
        value = exact_conditional_significance(dataset, simpler, complex_, criterion,
                                               rng=np.random.default_rng(stream))
    logger.debug(f"level {level} edge {edge}: dG2={delta.delta_g2:.4f} ddof={delta.delta_dof} value={value:.6g}")
    return _Candidate(edge, candidate, delta, value, _accepts(config, value))


def _metrics(dataset: Dataset, model: ModelGraph, test: Optional[Dataset]) -> Optional[Metrics]:
    if test is None:
        return None
    return evaluate(ModelClassifier(fit(dataset, model)), test)


def select_model(dataset: Dataset, config: SearchConfig, test: Optional[Dataset] = None,
                 workers: int = 1) -> SearchResult:
    """Greedy one-edge-at-a-time search from the saturated (BSS) or independence (FSS) model.

    Every level scores all decomposable neighbors against the current model
    and moves to the extremal accepted one. With a test set attached each
    trace step carries its accuracy and recall.
    """
    n = dataset.schema.n
    height = n * (n - 1) // 2
    max_steps = height if config.max_steps is None else config.max_steps
    backward = config.direction == BSS
    current = boundary_graph(n, SATURATED if backward else INDEPENDENCE)
    far_end = 0 if backward else height
    rank = _rank(config)

    trace: List[SearchStep] = [
        SearchStep(current.complexity, None, current, None, 0, metrics=_metrics(dataset, current, test))
    ]
    logger.info(f"Starting {config.label} search at {current.complexity} edges (N={dataset.N})")

    steps = 0
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        while True:
            if current.complexity == far_end:
                stop_reason = STOP_BOUNDARY
                break
            if steps >= max_steps:
                stop_reason = STOP_MAX_STEPS
                break
            neighbors = enumerate_neighbors(current, REMOVE if backward else ADD)
            if not neighbors:
                logger.warning(f"No decomposable neighbors of a model with {current.complexity} edges")
                stop_reason = STOP_NO_CANDIDATES
                break

            level = current.complexity
            candidates = list(pool.map(
                lambda pair: _score(dataset, config, current, level, *pair), neighbors
            ))
            accepted = [c for c in candidates if c.accepted]
            best = min(accepted or candidates, key=rank)
            trace.append(SearchStep(
                level=best.model.complexity,
                chosen_edge=best.edge,
                chosen_model=best.model,
                criterion_value=best.value,
                candidates_evaluated=len(candidates),
                accepted=best.accepted,
                delta=best.delta,
                metrics=_metrics(dataset, best.model, test),
            ))
            if not best.accepted:
                logger.info(f"Stopping at {current.complexity} edges: best candidate {best.edge} "
                            f"rejected (value {best.value:.6g})")
                stop_reason = STOP_CRITERION
                break

            current = best.model
            steps += 1
            logger.info(f"{config.label}: {'removed' if backward else 'added'} edge {best.edge} "
                        f"-> {current.complexity} edges (value {best.value:.6g})")

    return SearchResult(
        final_model=current,
        trace=tuple(trace),
        selected_features=class_neighbors(current, dataset.schema.class_index),
        stop_reason=stop_reason,
        config=config,
    )


def feature_report(result: SearchResult, schema: Schema) -> FeatureReport:
    """Features adjacent to the class variable are retained, the rest dropped"""
    names = [v.name for v in schema.features]
    retained = tuple(name for i, name in enumerate(names) if i in result.selected_features)
    dropped = tuple(name for i, name in enumerate(names) if i not in result.selected_features)
    return FeatureReport(retained, dropped)
