"""
Categorical data model: variables, schemas, encoded datasets and train/test splits
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

INT64_MAX = 2**63 - 1

# An encoded instance: one level index per schema variable, class last
Instance = Tuple[int, ...]


class SchemaError(ValueError):
    """Invalid schema, dataset or split request"""


class ParseError(SchemaError):
    """Delimited input could not be parsed"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EmptyInputError(ParseError):
    pass


class MissingClassColumnError(ParseError):
    pass


class RaggedRowError(ParseError):
    pass


class DuplicateColumnError(ParseError):
    pass


@dataclass(frozen=True)
class FeatureVariable:
    """A categorical variable with an ordered level inventory"""

    name: str
    levels: Tuple[str, ...]
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        levels = tuple(self.levels)
        if not self.name:
            raise SchemaError("variable name must be non-empty")
        if not levels:
            raise SchemaError(f"variable {self.name!r} has no levels")
        if len(set(levels)) != len(levels):
            raise SchemaError(f"variable {self.name!r} has duplicate level labels")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "_index", {label: i for i, label in enumerate(levels)})

    @property
    def cardinality(self) -> int:
        return len(self.levels)

    def index_of(self, label: str) -> Optional[int]:
        """Level index of a label, or None when the label was never inventoried"""
        return self._index.get(label)


@dataclass(frozen=True)
class Schema:
    """Feature variables plus the distinguished class variable (always last)"""

    features: Tuple[FeatureVariable, ...]
    class_var: FeatureVariable

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [v.name for v in self.features] + [self.class_var.name]
        if len(set(names)) != len(names):
            raise SchemaError(f"variable names must be distinct: {names}")

    @property
    def variables(self) -> Tuple[FeatureVariable, ...]:
        return self.features + (self.class_var,)

    @property
    def n(self) -> int:
        return len(self.features) + 1

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def class_index(self) -> int:
        return len(self.features)

    @property
    def cardinalities(self) -> Tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def position(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown variable {name!r}") from None

    def conforms(self, values: Sequence[int]) -> bool:
        if len(values) != self.n:
            return False
        return all(0 <= int(v) < k for v, k in zip(values, self.cardinalities))


@dataclass(frozen=True, eq=False)
class Dataset:
    """A multiset of encoded instances.

    Distinct vectors are kept once, sorted lexicographically by level index,
    with their multiplicities in ``counts``.
    """

    schema: Schema
    vectors: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.schema.n:
            raise SchemaError(f"vectors must have shape (m, {self.schema.n})")
        if len(self.vectors) != len(self.counts):
            raise SchemaError("vectors and counts differ in length")
        if len(self.counts) == 0 or int(self.counts.sum()) < 1:
            raise SchemaError("a dataset needs at least one instance")
        upper = np.asarray(self.schema.cardinalities)
        if (self.vectors < 0).any() or (self.vectors >= upper).any():
            raise SchemaError("a row does not conform to the schema")
        self.vectors.setflags(write=False)
        self.counts.setflags(write=False)

    @classmethod
    def from_rows(cls, schema: Schema, rows, counts=None) -> "Dataset":
        """Aggregate (possibly repeated) encoded rows into a dataset"""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, schema.n)
        weights = (np.ones(len(rows), dtype=np.int64) if counts is None
                   else np.asarray(counts, dtype=np.int64))
        if len(rows) == 0:
            raise SchemaError("a dataset needs at least one instance")
        keep = weights > 0
        rows, weights = rows[keep], weights[keep]
        vectors, inverse = np.unique(rows, axis=0, return_inverse=True)
        totals = np.zeros(len(vectors), dtype=np.int64)
        np.add.at(totals, inverse.reshape(-1), weights)
        return cls(schema, vectors.astype(np.int64), totals)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    def __len__(self) -> int:
        return self.N

    def rows(self) -> Iterator[Tuple[Instance, int]]:
        """Distinct instances with their multiplicities"""
        for vector, count in zip(self.vectors, self.counts):
            yield tuple(int(v) for v in vector), int(count)

    def expand(self) -> np.ndarray:
        """One row per observation, in canonical order"""
        return np.repeat(self.vectors, self.counts, axis=0)

    def count(self, instance: Sequence[int]) -> int:
        hits = np.all(self.vectors == np.asarray(instance), axis=1)
        return int(self.counts[hits].sum())

    def same_multiset(self, other: "Dataset") -> bool:
        return (self.schema == other.schema
                and np.array_equal(self.vectors, other.vectors)
                and np.array_equal(self.counts, other.counts))

    def _introduction_order(self) -> List[int]:
        """Distinct-vector order in which every column meets its levels as 0, 1, 2, ...

        Re-parsing text written in this order reproduces the level indices.
        Vectors are taken greedily in canonical order; a vector becomes
        admissible once none of its cells skips an unseen level.
        """
        highest = np.full(self.schema.n, -1, dtype=np.int64)
        remaining = list(range(len(self.vectors)))
        order: List[int] = []
        while remaining:
            deferred = []
            for i in remaining:
                if (self.vectors[i] <= highest + 1).all():
                    order.append(i)
                    np.maximum(highest, self.vectors[i], out=highest)
                else:
                    deferred.append(i)
            if len(deferred) == len(remaining):
                # levels no row uses; their indices cannot survive a round trip
                logger.debug(f"{len(deferred)} vectors written after unused levels")
                order.extend(deferred)
                break
            remaining = deferred
        return order

    def to_text(self, delimiter: str = ",") -> str:
        """Serialize as delimited text: header, then one line per observation"""
        variables = self.schema.variables
        lines = [delimiter.join(self.schema.names)]
        for i in self._introduction_order():
            line = delimiter.join(var.levels[int(v)] for var, v in zip(variables, self.vectors[i]))
            lines.extend([line] * int(self.counts[i]))
        return "\n".join(lines) + "\n"


def parse_dataset(text: Union[str, TextIO], class_column: str, delimiter: str = ",") -> Dataset:
    """Parse delimited text with a mandatory header into an encoded dataset.

    Levels are inventoried per column in first-appearance order. The class
    column may sit anywhere in the header; it becomes the last variable.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()

    header_at = next((i for i, line in enumerate(lines) if line.strip()), None)
    if header_at is None:
        raise EmptyInputError("input is empty", line=1)
    header = [cell.strip() for cell in lines[header_at].split(delimiter)]
    seen = set()
    for name in header:
        if not name:
            raise ParseError("empty column name in header", line=header_at + 1)
        if name in seen:
            raise DuplicateColumnError(f"duplicate column {name!r}", line=header_at + 1)
        seen.add(name)
    if class_column not in header:
        raise MissingClassColumnError(f"class column {class_column!r} not in header", line=header_at + 1)

    width = len(header)
    class_pos = header.index(class_column)
    order = [i for i in range(width) if i != class_pos] + [class_pos]
    inventories: List[Dict[str, int]] = [{} for _ in range(width)]
    encoded: List[List[int]] = []

    for lineno, line in enumerate(lines[header_at + 1:], start=header_at + 2):
        if not line.strip():
            continue
        cells = [cell.strip() for cell in line.split(delimiter)]
        if len(cells) != width:
            raise RaggedRowError(f"expected {width} cells, found {len(cells)}", line=lineno)
        row = []
        for col in order:
            inventory = inventories[col]
            row.append(inventory.setdefault(cells[col], len(inventory)))
        encoded.append(row)

    if not encoded:
        raise EmptyInputError("no data rows after header", line=header_at + 2)

    variables = [FeatureVariable(header[col], tuple(inventories[col])) for col in order]
    schema = Schema(tuple(variables[:-1]), variables[-1])
    dataset = Dataset.from_rows(schema, encoded)
    logger.info(f"Parsed {dataset.N} instances over {schema.n} variables "
                f"({len(dataset.vectors)} distinct vectors)")
    return dataset


def read_dataset(path: Union[str, Path], class_column: str, delimiter: str = ",") -> Dataset:
    with open(path, "r", encoding="utf-8") as f:
        return parse_dataset(f, class_column, delimiter)


def write_dataset(dataset: Dataset, path: Union[str, Path], delimiter: str = ",") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dataset.to_text(delimiter), encoding="utf-8")
    logger.info(f"Wrote {dataset.N} rows to {path}")
    return path


def as_fraction(value: Union[Fraction, float, int, str]) -> Fraction:
    """Exact fraction from '1/11', 0.0909..., or a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**6)
    return Fraction(value)


def split(dataset: Dataset, test_fraction: Union[Fraction, float, str] = Fraction(1, 11),
          seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Random train/test partition; |test| = floor(N * test_fraction).

    Both shares keep the full schema, so level inventories come from the
    whole dataset.
    """
    fraction = as_fraction(test_fraction)
    if not 0 < fraction < 1:
        raise SchemaError(f"test fraction must lie strictly between 0 and 1, got {fraction}")
    N = dataset.N
    if N < 2:
        raise SchemaError("splitting needs at least two instances")
    n_test = (N * fraction.numerator) // fraction.denominator
    if n_test == 0 or n_test == N:
        raise SchemaError(f"fraction {fraction} leaves an empty share for N={N}")

    rows = dataset.expand()
    order = np.random.default_rng(seed).permutation(N)
    test = Dataset.from_rows(dataset.schema, rows[order[:n_test]])
    train = Dataset.from_rows(dataset.schema, rows[order[n_test:]])
    logger.info(f"Split N={N} into {train.N} train / {test.N} test (fraction {fraction}, seed {seed})")
    return train, test


def levels_product(schema: Schema) -> int:
    """Number of possible feature vectors q"""
    q = 1
    for k in schema.cardinalities:
        q *= k
        if q > INT64_MAX:
            raise SchemaError(f"levels product exceeds the 64-bit range ({schema.n} variables)")
    return q
