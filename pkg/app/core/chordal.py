"""
Model graphs: decomposability (chordality), clique decompositions,
one-edge neighbors and the parenthesized clique notation
"""
import logging
import re
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import FrozenSet, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

SATURATED = "saturated"
INDEPENDENCE = "independence"
ADD = "add"
REMOVE = "remove"


class NotDecomposableError(ValueError):
    """The graph is not chordal"""


class NotationError(ValueError):
    """A clique-list string could not be parsed"""


def canonical_edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ModelGraph:
    """Undirected graph over variable indices 0..n-1; edges are interdependencies"""

    n: int
    edges: FrozenSet[Edge] = frozenset()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"variable count must be non-negative, got {self.n}")
        canonical = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
            canonical.add(canonical_edge(i, j))
        object.__setattr__(self, "edges", frozenset(canonical))

    @cached_property
    def adjacency(self) -> Tuple[FrozenSet[int], ...]:
        adj = [set() for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return tuple(frozenset(a) for a in adj)

    @property
    def complexity(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return canonical_edge(i, j) in self.edges

    def add_edge(self, i: int, j: int) -> "ModelGraph":
        return ModelGraph(self.n, self.edges | {canonical_edge(i, j)})

    def remove_edge(self, i: int, j: int) -> "ModelGraph":
        return ModelGraph(self.n, self.edges - {canonical_edge(i, j)})


@dataclass(frozen=True)
class Decomposition:
    """Maximal cliques in a running-intersection order.

    ``separators[j]`` belongs to ``cliques[j + 1]``: it is that clique's
    intersection with the union of the cliques before it. Empty separators
    stand for probability-1 factors between disconnected components.
    """

    cliques: Tuple[Tuple[int, ...], ...]
    separators: Tuple[Tuple[int, ...], ...]

    def parent(self, j: int) -> Optional[int]:
        """Index of the earliest clique holding the separator of clique j (j >= 1)"""
        sep = set(self.separators[j - 1])
        if not sep:
            return None
        return next(k for k in range(j) if sep <= set(self.cliques[k]))


def boundary_graph(n: int, kind: str) -> ModelGraph:
    """Saturated (all pairs) or independence (no edges) model on n variables"""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if kind == SATURATED:
        return ModelGraph(n, frozenset(combinations(range(n), 2)))
    if kind == INDEPENDENCE:
        return ModelGraph(n)
    raise ValueError(f"unknown boundary kind {kind!r}")


def complexity(g: ModelGraph) -> int:
    return g.complexity


def _max_cardinality_search(g: ModelGraph) -> Tuple[List[int], List[FrozenSet[int]]]:
    """Visit order plus, for each visited vertex, its previously visited neighbors.

    Ties go to the lowest vertex index.
    """
    weight = [0] * g.n
    visited = [False] * g.n
    order: List[int] = []
    earlier: List[FrozenSet[int]] = []
    adj = g.adjacency
    for _ in range(g.n):
        v = max((u for u in range(g.n) if not visited[u]), key=lambda u: (weight[u], -u))
        visited[v] = True
        earlier.append(frozenset(u for u in adj[v] if visited[u] and u != v))
        order.append(v)
        for u in adj[v]:
            if not visited[u]:
                weight[u] += 1
    return order, earlier


def _is_perfect_elimination(g: ModelGraph, order: List[int], earlier: List[FrozenSet[int]]) -> bool:
    position = {v: i for i, v in enumerate(order)}
    adj = g.adjacency
    for prior in earlier:
        if len(prior) < 2:
            continue
        latest = max(prior, key=position.__getitem__)
        if not (prior - {latest}) <= adj[latest]:
            return False
    return True


def is_decomposable(g: ModelGraph) -> bool:
    """True iff g is chordal"""
    order, earlier = _max_cardinality_search(g)
    return _is_perfect_elimination(g, order, earlier)


def decompose(g: ModelGraph) -> Decomposition:
    """Maximal cliques and separators of a chordal graph, from its MCS order"""
    order, earlier = _max_cardinality_search(g)
    if not _is_perfect_elimination(g, order, earlier):
        raise NotDecomposableError(f"graph with edges {g.sorted_edges()} is not chordal")

    cliques: List[List[int]] = []
    separators: List[Tuple[int, ...]] = []
    previous = -1
    for v, prior in zip(order, earlier):
        # a new maximal clique starts whenever the label stops growing
        if cliques and len(prior) > previous:
            cliques[-1].append(v)
        else:
            if cliques:
                separators.append(tuple(sorted(prior)))
            cliques.append(sorted(prior) + [v])
        previous = len(prior)
    return Decomposition(tuple(tuple(sorted(c)) for c in cliques), tuple(separators))


def enumerate_neighbors(g: ModelGraph, direction: str) -> List[Tuple[Edge, ModelGraph]]:
    """Decomposable graphs one edge away from g, in canonical edge order"""
    if direction not in (ADD, REMOVE):
        raise ValueError(f"unknown direction {direction!r}")
    neighbors = []
    for i, j in combinations(range(g.n), 2):
        present = g.has_edge(i, j)
        if direction == ADD and not present:
            candidate = g.add_edge(i, j)
        elif direction == REMOVE and present:
            candidate = g.remove_edge(i, j)
        else:
            continue
        if is_decomposable(candidate):
            neighbors.append(((i, j), candidate))
    return neighbors


def edge_clique(g: ModelGraph, i: int, j: int) -> Tuple[int, ...]:
    """The clique {i, j} plus their common neighbors.

    For an edge of a chordal graph whose removal keeps it chordal, this is
    the unique maximal clique containing the edge.
    """
    adj = g.adjacency
    common = (adj[i] & adj[j]) - {i, j}
    return tuple(sorted(common | {i, j}))


def class_neighbors(g: ModelGraph, class_index: int) -> FrozenSet[int]:
    return g.adjacency[class_index]


def format_notation(g: ModelGraph, names: Sequence[str], last: Optional[str] = None) -> str:
    """Render as ``(C2 E S)(C1 C3 S)``.

    Names inside a clique are sorted alphabetically with ``last`` (usually the
    class variable) moved to the end; cliques are then sorted by content.
    """
    if len(names) != g.n:
        raise NotationError(f"expected {g.n} names, got {len(names)}")
    rendered = []
    for clique in decompose(g).cliques:
        members = sorted((names[v] for v in clique), key=lambda name: (name == last, name))
        rendered.append(members)
    rendered.sort()
    return "".join("(" + " ".join(members) + ")" for members in rendered)


_CLIQUE = re.compile(r"\(([^()]*)\)")


def parse_notation(text: str, names: Sequence[str]) -> ModelGraph:
    """Inverse of format_notation; variables not mentioned are isolated"""
    index = {name: i for i, name in enumerate(names)}
    leftover = _CLIQUE.sub("", text).strip()
    if leftover:
        raise NotationError(f"unexpected text outside cliques: {leftover!r}")
    edges = set()
    for match in _CLIQUE.finditer(text):
        members = match.group(1).split()
        if not members:
            raise NotationError("empty clique '()'")
        unknown = [m for m in members if m not in index]
        if unknown:
            raise NotationError(f"unknown variables {unknown}")
        positions = sorted({index[m] for m in members})
        edges.update(combinations(positions, 2))
    return ModelGraph(len(names), frozenset(edges))
