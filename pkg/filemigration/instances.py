"""
Instance generators: the linear and bipartite tight geometries, and random
instances for property testing.
"""
import logging
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .constants import migration_constants
from .exceptions import InstanceError
from .metric import MetricSpace, validate_metric

logger = logging.getLogger(__name__)

EUCLIDEAN = 'euclidean-sample'
RANDOM_GRAPH = 'random-graph-shortest-path'
RANDOM_KINDS = (EUCLIDEAN, RANDOM_GRAPH)


def round_half_up(x: float) -> int:
    """Nearest integer, ties up."""
    return int(math.floor(x + 0.5))


def _rounding(quantity, exact, used):
    return {'quantity': quantity, 'exact': float(exact), 'used': int(used)}


@dataclass(frozen=True, eq=False)
class Instance:
    space: MetricSpace
    start: int
    requests: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'start', self.space.check_point(self.start))
        object.__setattr__(
            self, 'requests', tuple(self.space.check_point(r) for r in self.requests)
        )

    @property
    def D(self):
        return self.space.D

    def __len__(self):
        return len(self.requests)

    def to_dict(self):
        return {
            'D': int(self.space.D),
            'points': list(self.space.names),
            'dist': self.space.dist.tolist(),
            'start': self.start,
            'requests': list(self.requests),
        }


def round_robin(points, count):
    if not points:
        raise InstanceError("round robin needs at least one point")
    if count < 0:
        raise InstanceError("request count must be nonnegative")
    k = len(points)
    return [points[i % k] for i in range(count)]


def two_point_space(length, D, names=('a', 'b')):
    return MetricSpace([[0.0, length], [length, 0.0]], D, names=names)


def linear_instance(c: float, D: int) -> Instance:
    """Single edge a-b of length 1: (c - t)D requests at a, then the rest at b."""
    if D < 1:
        raise InstanceError(f"D must be at least 1, got {D}")
    t = migration_constants().tLin
    if c <= t:
        raise InstanceError(f"linear play needs c > t = {t:.6f}, got c = {c}")
    total = round_half_up(c * D)
    at_a = round_half_up((c - t) * D)
    at_b = total - at_a
    metadata = {
        'generator': 'linear',
        'params': {'c': c, 'D': D},
        'rounding': [
            _rounding('c*D', c * D, total),
            _rounding('(c-t)*D', (c - t) * D, at_a),
            _rounding('t*D', t * D, at_b),
        ],
        'layout': {'a': 0, 'b': 1},
    }
    return Instance(two_point_space(1.0, D), 0, tuple([0] * at_a + [1] * at_b), metadata)


def bipartite_layout(k):
    return {'a': 0, 'Q': list(range(1, k + 1)), 'S': list(range(k + 1, 2 * k + 1))}


def bipartite_graph(k: int, f: float, alpha: float):
    """a joined to every q_i by length f; q_i joined to s_j (i != j) by alpha*f."""
    graph = nx.Graph()
    graph.add_node('a')
    graph.add_nodes_from(f"q{i}" for i in range(1, k + 1))
    graph.add_nodes_from(f"s{j}" for j in range(1, k + 1))
    for i in range(1, k + 1):
        graph.add_edge('a', f"q{i}", weight=f)
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if i != j:
                graph.add_edge(f"q{i}", f"s{j}", weight=alpha * f)
    return graph


def bipartite_instance(k: int, f: float, c: float, D: int, alpha=None) -> Instance:
    if k < 3:
        raise InstanceError(f"bipartite geometry needs k >= 3, got {k}")
    if f <= 0:
        raise InstanceError(f"edge scale f must be positive, got {f}")
    if alpha is None:
        alpha = migration_constants().alpha
    if alpha <= 0:
        raise InstanceError(f"alpha must be positive, got {alpha}")
    count = round_half_up(c * D)
    if count < k:
        raise InstanceError(f"c*D = {count} requests cannot cover all {k} nodes of S")
    space = MetricSpace.from_graph(bipartite_graph(k, f, alpha), D)
    layout = bipartite_layout(k)
    metadata = {
        'generator': 'bipartite',
        'params': {'k': k, 'f': f, 'c': c, 'D': D, 'alpha': alpha},
        'rounding': [_rounding('c*D', c * D, count)],
        'layout': layout,
    }
    return Instance(space, layout['a'], tuple(round_robin(layout['S'], count)), metadata)


def _euclidean_space(rng, n, D):
    points = rng.random((n, 2))
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    return MetricSpace(dist, D, names=[f"x{i}" for i in range(n)])


def _random_graph_space(rng, n, D, extra_edge_probability=0.3):
    graph = nx.Graph()
    graph.add_nodes_from(f"v{i}" for i in range(n))
    # random spanning tree keeps the graph connected
    for i in range(1, n):
        j = int(rng.integers(0, i))
        graph.add_edge(f"v{i}", f"v{j}", weight=float(rng.uniform(0.1, 1.0)))
    for i in range(n):
        for j in range(i + 1, n):
            if not graph.has_edge(f"v{i}", f"v{j}") and rng.random() < extra_edge_probability:
                graph.add_edge(f"v{i}", f"v{j}", weight=float(rng.uniform(0.1, 1.0)))
    return MetricSpace.from_graph(graph, D)


def random_instance(n: int, D: int, T: int, seed: int, kind: str = EUCLIDEAN) -> Instance:
    if n < 1:
        raise InstanceError(f"n must be at least 1, got {n}")
    if T < 1:
        raise InstanceError(f"T must be at least 1, got {T}")
    if D < 1:
        raise InstanceError(f"D must be at least 1, got {D}")
    if kind not in RANDOM_KINDS:
        raise InstanceError(f"unknown random instance kind {kind!r}")
    rng = np.random.default_rng(seed)
    if kind == EUCLIDEAN:
        space = _euclidean_space(rng, n, D)
    else:
        space = _random_graph_space(rng, n, D)
    start = int(rng.integers(0, n))
    requests = tuple(int(r) for r in rng.integers(0, n, size=T))
    metadata = {
        'generator': 'random',
        'params': {'n': n, 'D': D, 'T': T, 'seed': seed, 'kind': kind},
    }
    return Instance(space, start, requests, metadata)


def all_at_start_instance(space: MetricSpace, start: int, T: int) -> Instance:
    return Instance(space, start, tuple([start] * T), {'generator': 'all-at-start'})


def checked(instance: Instance) -> Instance:
    """Reject instances whose metric fails validation."""
    report = validate_metric(instance.space)
    if not report.valid:
        raise InstanceError(
            f"invalid metric: {report.count} violations, worst {report.worst:.3g}"
        )
    return instance
