"""
Finite metric spaces and the bracket notation.

[v1, v2] is D times the distance, [v, S] is D times the average distance from
v to the multiset S, and a path [x1, x2, ..., xj] is the sum of the brackets of
consecutive elements. [S, T] for two multisets is the mean pairwise distance
times D; it is only used when explicitly requested.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import networkx as nx
import numpy as np

from .conf import tolerance
from .exceptions import (
    EmptyMultisetError,
    InvalidPointError,
    MetricStructureError,
    PathError,
)

logger = logging.getLogger(__name__)

PointId = int

# Violations kept verbatim in a report; the rest are only counted
MAX_LISTED_VIOLATIONS = 50


class MetricSpace:
    """Point labels, a symmetric distance matrix and the file size D."""

    __slots__ = ('names', 'dist', 'D')

    def __init__(self, dist, D, names=None):
        matrix = np.array(dist, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
            raise MetricStructureError(
                f"distance matrix must be square and nonempty, got shape {matrix.shape}"
            )
        matrix.setflags(write=False)
        if names is None:
            names = [f"p{i}" for i in range(matrix.shape[0])]
        if len(names) != matrix.shape[0]:
            raise MetricStructureError(
                f"{len(names)} labels for {matrix.shape[0]} points"
            )
        self.names = tuple(str(name) for name in names)
        self.dist = matrix
        self.D = D

    @classmethod
    def from_graph(cls, graph, D, weight='weight'):
        """Shortest-path metric of a weighted networkx graph (node order kept)."""
        if graph.number_of_nodes() == 0:
            raise MetricStructureError("graph has no nodes")
        if not nx.is_connected(graph):
            raise MetricStructureError("graph is not connected")
        nodes = list(graph.nodes())
        matrix = np.asarray(nx.floyd_warshall_numpy(graph, nodelist=nodes, weight=weight))
        # both directions are shortest-path lengths; keep the matrix exactly symmetric
        return cls(np.minimum(matrix, matrix.T), D, names=nodes)

    @property
    def n(self):
        return self.dist.shape[0]

    def check_point(self, v) -> int:
        if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
            raise InvalidPointError(f"point id must be an integer, got {v!r}")
        if not 0 <= v < self.n:
            raise InvalidPointError(f"point id {v} outside 0..{self.n - 1}")
        return int(v)

    def label(self, v):
        return self.names[v]

    def __repr__(self):
        return f"MetricSpace(n={self.n}, D={self.D})"


@dataclass(frozen=True)
class Violation:
    constraint: str
    indices: tuple
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    worst: float = 0.0
    count: int = 0

    @property
    def valid(self):
        return self.count == 0

    def __bool__(self):
        return self.count > 0


def validate_metric(space: MetricSpace, tol=None) -> ValidationReport:
    """Check the metric axioms within tolerance; empty report iff valid."""
    tol = tolerance() if tol is None else tol
    d = space.dist
    n = space.n
    listed = []
    count = 0
    worst = 0.0

    def record(constraint, indices, magnitude):
        nonlocal count, worst
        count += 1
        worst = max(worst, float(magnitude))
        if len(listed) < MAX_LISTED_VIOLATIONS:
            listed.append(Violation(constraint, tuple(int(i) for i in indices), float(magnitude)))

    if isinstance(space.D, bool) or not isinstance(space.D, (int, np.integer)):
        record('file_size', (), 1.0)
    elif space.D < 1:
        record('file_size', (), 1.0 - space.D)

    if not np.all(np.isfinite(d)):
        raise MetricStructureError("distance matrix contains non-finite entries")

    for i in np.flatnonzero(np.abs(np.diag(d)) > tol):
        record('diagonal', (i,), abs(d[i, i]))

    asym = np.abs(d - d.T)
    for i, j in zip(*np.nonzero(np.triu(asym > tol, k=1))):
        record('symmetry', (i, j), asym[i, j])

    for i, j in zip(*np.nonzero(d < -tol)):
        record('nonnegative', (i, j), -d[i, j])

    # d[i, k] <= d[i, j] + d[j, k], one middle point at a time
    for j in range(n):
        excess = d - (d[:, j][:, None] + d[j, :][None, :])
        for i, k in zip(*np.nonzero(excess > tol)):
            record('triangle', (i, j, k), excess[i, k])

    if count:
        logger.debug("metric with %d points has %d violations (worst %.3g)", n, count, worst)
    return ValidationReport(tuple(listed), worst, count)


@dataclass(frozen=True)
class RequestMultiset:
    """A multiset of points: sorted (point, multiplicity) pairs."""

    counts: tuple = field(default=())

    def __post_init__(self):
        if not self.counts:
            raise EmptyMultisetError("request multiset must not be empty")
        for point, count in self.counts:
            if count < 1:
                raise EmptyMultisetError(f"point {point} has multiplicity {count}")

    @classmethod
    def from_requests(cls, requests: Iterable[PointId]):
        counter = Counter(int(r) for r in requests)
        return cls(tuple(sorted(counter.items())))

    @classmethod
    def from_counts(cls, counts):
        return cls(tuple(sorted((int(p), int(c)) for p, c in dict(counts).items() if c)))

    @property
    def total(self):
        return sum(count for _, count in self.counts)

    def __len__(self):
        return self.total

    def as_dict(self):
        return dict(self.counts)

    def arrays(self):
        ids = np.fromiter((p for p, _ in self.counts), dtype=int, count=len(self.counts))
        weights = np.fromiter((c for _, c in self.counts), dtype=float, count=len(self.counts))
        return ids, weights

    def union(self, other: 'RequestMultiset') -> 'RequestMultiset':
        merged = Counter(self.as_dict())
        merged.update(other.as_dict())
        return RequestMultiset.from_counts(merged)

    def expand(self):
        return [p for p, c in self.counts for _ in range(c)]

    def check_in(self, space: MetricSpace):
        for point, _ in self.counts:
            space.check_point(point)
        return self


PathElement = Union[PointId, RequestMultiset]


def bracket(space: MetricSpace, v1: PointId, v2: PointId) -> float:
    v1, v2 = space.check_point(v1), space.check_point(v2)
    return space.D * float(space.dist[v1, v2])


def bracket_multiset(space: MetricSpace, v: PointId, S: RequestMultiset) -> float:
    v = space.check_point(v)
    if not isinstance(S, RequestMultiset):
        raise EmptyMultisetError("expected a nonempty RequestMultiset")
    ids, weights = S.check_in(space).arrays()
    return space.D * float(space.dist[v, ids] @ weights) / S.total


def bracket_to_all(space: MetricSpace, S: RequestMultiset) -> np.ndarray:
    """[v, S] for every point v of the space."""
    ids, weights = S.check_in(space).arrays()
    return space.D * (space.dist[:, ids] @ weights) / S.total


def bracket_multiset_pair(space: MetricSpace, S: RequestMultiset, T: RequestMultiset) -> float:
    """Mean pairwise distance between two multisets, times D."""
    s_ids, s_weights = S.check_in(space).arrays()
    t_ids, t_weights = T.check_in(space).arrays()
    block = space.dist[np.ix_(s_ids, t_ids)]
    return space.D * float(s_weights @ block @ t_weights) / (S.total * T.total)


def bracket_pair(space: MetricSpace, x: PathElement, y: PathElement, allow_multiset_pairs=False) -> float:
    x_set = isinstance(x, RequestMultiset)
    y_set = isinstance(y, RequestMultiset)
    if x_set and y_set:
        if not allow_multiset_pairs:
            raise PathError("[S, T] is undefined for two multisets without the pair extension")
        return bracket_multiset_pair(space, x, y)
    if x_set:
        return bracket_multiset(space, y, x)
    if y_set:
        return bracket_multiset(space, x, y)
    return bracket(space, x, y)


def bracket_path(space: MetricSpace, path: Sequence[PathElement], allow_multiset_pairs=False) -> float:
    if len(path) < 2:
        raise PathError("a bracket path needs at least two elements")
    return sum(
        bracket_pair(space, x, y, allow_multiset_pairs)
        for x, y in zip(path, path[1:])
    )


def path_length(space: MetricSpace, positions: Sequence[PointId]) -> float:
    """Sum of distances along consecutive positions (no D factor)."""
    if len(positions) < 2:
        return 0.0
    idx = np.asarray(positions, dtype=int)
    return float(space.dist[idx[:-1], idx[1:]].sum())
