"""
Model evaluation criteria: G², chi-square significance of nested differences,
Monte Carlo exact conditional significance, and information criteria (AIC/BIC)
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import sparse
from scipy.special import gammainc, gammaincc, xlogy

from app.core.chordal import Edge, ModelGraph, edge_clique, is_decomposable
from app.core.estimate import DOF_CELLS, DOF_JOINT, FittedModel, adjusted_dof, log_expected_counts, marginal_table
from app.core.schema import Dataset

logger = logging.getLogger(__name__)

AIC = "aic"
BIC = "bic"
CHI2 = "chi2"
EXACT = "exact"
KINDS = (AIC, BIC, CHI2, EXACT)
SIGNIFICANCE_KINDS = (CHI2, EXACT)

# slack when comparing G² values that should tie
TOLERANCE = 1e-9

# replicates drawn per multinomial batch
_BATCH = 256


class CriterionError(ValueError):
    """Invalid criterion input"""


@dataclass(frozen=True)
class DeltaStats:
    """Fit difference between two nested models (simpler minus more complex)"""

    delta_g2: float
    delta_dof: int


@dataclass(frozen=True)
class CriterionConfig:
    kind: str
    alpha: Optional[float] = None
    mc_replicates: int = 999
    seed: int = 0
    literal_alpha_rule: bool = False
    dof_mode: str = DOF_CELLS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CriterionError(f"unknown criterion {self.kind!r}; expected one of {KINDS}")
        if self.kind in SIGNIFICANCE_KINDS and (self.alpha is None or not 0 < self.alpha < 1):
            raise CriterionError(f"{self.kind} needs 0 < alpha < 1, got {self.alpha}")
        if self.mc_replicates < 1:
            raise CriterionError(f"mc_replicates must be at least 1, got {self.mc_replicates}")
        if not 0 <= self.seed < 2**64:
            raise CriterionError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.dof_mode not in (DOF_CELLS, DOF_JOINT):
            raise CriterionError(f"unknown dof mode {self.dof_mode!r}")

    @property
    def is_significance(self) -> bool:
        return self.kind in SIGNIFICANCE_KINDS

    @property
    def label(self) -> str:
        return f"{self.kind}@{self.alpha:g}" if self.is_significance else self.kind

    def kappa(self, N: int) -> float:
        """Penalty weight: 2 for AIC, ln N for BIC"""
        if self.kind == AIC:
            return 2.0
        if self.kind == BIC:
            return math.log(N)
        raise CriterionError(f"{self.kind} is not an information criterion")


def g_squared(dataset: Dataset, model: FittedModel) -> float:
    """Likelihood-ratio statistic 2 * sum f_i ln(f_i / e_i) over observed vectors"""
    if model.schema != dataset.schema or model.N != dataset.N:
        raise CriterionError("model was not fitted on this dataset")
    log_e = log_expected_counts(model, dataset.vectors)
    if np.isneginf(log_e).any():
        raise CriterionError("an observed vector has zero fitted probability")
    f = dataset.counts.astype(float)
    return max(float(2.0 * np.sum(f * (np.log(f) - log_e))), 0.0)


def chi_square_cdf(x: float, dof: int) -> float:
    """Regularized lower incomplete gamma P(dof/2, x/2)"""
    if dof <= 0:
        raise CriterionError(f"dof must be positive, got {dof}")
    if x < 0:
        raise CriterionError(f"x must be non-negative, got {x}")
    return float(gammainc(dof / 2.0, x / 2.0))


def nested_edge(simpler: ModelGraph, complex_: ModelGraph) -> Optional[Edge]:
    """The one edge ``complex_`` adds to ``simpler``; None when they are equal"""
    if simpler.n != complex_.n or not simpler.edges <= complex_.edges:
        raise CriterionError("models are not nested")
    extra = complex_.edges - simpler.edges
    if len(extra) > 1:
        raise CriterionError(f"models differ by {len(extra)} edges, expected one")
    return next(iter(extra)) if extra else None


def delta_statistics(dataset: Dataset, simpler: FittedModel, complex_: FittedModel,
                     dof_mode: str = DOF_CELLS) -> DeltaStats:
    """(G²(simpler) - G²(complex), dof(complex) - dof(simpler)), both clamped at 0"""
    nested_edge(simpler.graph, complex_.graph)
    delta_g2 = g_squared(dataset, simpler) - g_squared(dataset, complex_)
    delta_dof = adjusted_dof(complex_, dof_mode) - adjusted_dof(simpler, dof_mode)
    return DeltaStats(max(delta_g2, 0.0), max(delta_dof, 0))


def _indicator(cells: np.ndarray, columns: Sequence[int]) -> sparse.csr_matrix:
    """Sparse one-hot map from cells to their projection onto ``columns``"""
    if columns:
        _, inverse = np.unique(cells[:, list(columns)], axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    else:
        inverse = np.zeros(len(cells), dtype=np.int64)
    m = len(cells)
    return sparse.csr_matrix((np.ones(m), (np.arange(m), inverse)), shape=(m, int(inverse.max()) + 1))


class _EdgeTable:
    """Counts over the clique C holding edge (u, v) plus its three sub-margins.

    With S = C - {u, v}, removing the edge replaces C by C-u and C-v joined
    at S, so both difference statistics only need these four margins.
    """

    def __init__(self, cells: np.ndarray, counts: np.ndarray, pu: int, pv: int):
        k = cells.shape[1]
        self.cells = cells
        self.counts = counts
        self.pu, self.pv = pu, pv
        self.rest = [p for p in range(k) if p not in (pu, pv)]
        self.without_u = _indicator(cells, [p for p in range(k) if p != pu])
        self.without_v = _indicator(cells, [p for p in range(k) if p != pv])
        self.without_uv = _indicator(cells, self.rest)

    @classmethod
    def observed(cls, dataset: Dataset, complex_: ModelGraph, edge: Edge) -> "_EdgeTable":
        u, v = edge
        clique = edge_clique(complex_, u, v)
        table = marginal_table(dataset, clique)
        keys = sorted(table.counts)
        cells = np.array(keys, dtype=np.int64).reshape(len(keys), len(clique))
        counts = np.array([table.counts[key] for key in keys], dtype=float)
        return cls(cells, counts, clique.index(u), clique.index(v))

    def with_product_support(self) -> "_EdgeTable":
        """Same counts laid out over every cell the simpler model can produce.

        A cell is reachable when its (S, u) and (S, v) projections were both
        observed; unobserved reachable cells carry count 0.
        """
        u_levels: Dict[Tuple[int, ...], Set[int]] = {}
        v_levels: Dict[Tuple[int, ...], Set[int]] = {}
        for cell in self.cells.tolist():
            s = tuple(cell[p] for p in self.rest)
            u_levels.setdefault(s, set()).add(cell[self.pu])
            v_levels.setdefault(s, set()).add(cell[self.pv])
        support: List[List[int]] = []
        for s in sorted(u_levels):
            for a in sorted(u_levels[s]):
                for b in sorted(v_levels[s]):
                    cell = [0] * self.cells.shape[1]
                    for p, value in zip(self.rest, s):
                        cell[p] = value
                    cell[self.pu], cell[self.pv] = a, b
                    support.append(cell)
        support.sort()
        observed = {tuple(c): n for c, n in zip(self.cells.tolist(), self.counts)}
        counts = np.array([observed.get(tuple(c), 0.0) for c in support])
        return _EdgeTable(np.array(support, dtype=np.int64), counts, self.pu, self.pv)

    def delta_g2(self, counts: np.ndarray) -> np.ndarray:
        """2 N I(u; v | S) for each row of ``counts`` (one count vector per row)"""
        counts = np.atleast_2d(np.asarray(counts, dtype=float))

        def xlogx(margin: Optional[sparse.csr_matrix]) -> np.ndarray:
            grouped = counts if margin is None else np.asarray((margin.T @ counts.T).T)
            return xlogy(grouped, grouped).sum(axis=1)

        terms = xlogx(None) + xlogx(self.without_uv) - xlogx(self.without_u) - xlogx(self.without_v)
        return np.maximum(2.0 * terms, 0.0)

    def delta_dof(self) -> int:
        def nonzero(margin: sparse.csr_matrix) -> int:
            return int(np.count_nonzero(margin.T @ self.counts))

        dof = (np.count_nonzero(self.counts) - nonzero(self.without_u) - nonzero(self.without_v)
               + nonzero(self.without_uv))
        return max(int(dof), 0)

    def null_probabilities(self) -> np.ndarray:
        """Fitted C-marginal of the simpler model: f(S,u) f(S,v) / (f(S) N)"""
        su = self.without_v @ (self.without_v.T @ self.counts)
        sv = self.without_u @ (self.without_u.T @ self.counts)
        s = self.without_uv @ (self.without_uv.T @ self.counts)
        probs = su * sv / (s * self.counts.sum())
        return probs / probs.sum()


def edge_delta(dataset: Dataset, complex_: ModelGraph, edge: Edge) -> DeltaStats:
    """Nested-difference statistics for dropping ``edge`` from ``complex_``.

    Both graphs must be decomposable. Agrees with delta_statistics in cells
    mode without fitting either model.
    """
    table = _EdgeTable.observed(dataset, complex_, edge)
    return DeltaStats(float(table.delta_g2(table.counts)[0]), table.delta_dof())


def chi2_significance(delta: DeltaStats) -> float:
    """Upper-tail chi-square probability of the nested difference (dof floored at 1)"""
    dof = max(delta.delta_dof, 1)
    return float(gammaincc(dof / 2.0, max(delta.delta_g2, 0.0) / 2.0))


def exact_conditional_significance(dataset: Dataset, simpler_graph: ModelGraph, complex_graph: ModelGraph,
                                   config: CriterionConfig, rng: Optional[np.random.Generator] = None) -> float:
    """Monte Carlo significance of the nested difference.

    Replicate datasets of size N are drawn from the fitted simpler model. The
    refit difference only depends on a replicate's margin over the clique
    holding the extra edge, so that margin is drawn directly (one multinomial
    per replicate). Returns (1 + hits) / (R + 1).
    """
    R = config.mc_replicates
    if R < 1:
        raise CriterionError(f"mc_replicates must be at least 1, got {R}")
    edge = nested_edge(simpler_graph, complex_graph)
    if edge is None:
        return 1.0
    if not (is_decomposable(simpler_graph) and is_decomposable(complex_graph)):
        raise CriterionError("both models must be decomposable")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, *edge]))

    table = _EdgeTable.observed(dataset, complex_graph, edge).with_product_support()
    observed = float(table.delta_g2(table.counts)[0])
    probs = table.null_probabilities()
    hits = 0
    for start in range(0, R, _BATCH):
        draws = rng.multinomial(dataset.N, probs, size=min(_BATCH, R - start))
        hits += int(np.count_nonzero(table.delta_g2(draws) >= observed - TOLERANCE))
    p = (1 + hits) / (R + 1)
    logger.debug(f"exact test on edge {edge}: observed dG2={observed:.4f}, {hits}/{R} replicates as extreme, p={p:.4f}")
    return p


def information_criterion(delta: DeltaStats, kappa: float) -> float:
    """IC_kappa = delta_g2 - kappa * delta_dof"""
    return delta.delta_g2 - kappa * delta.delta_dof
