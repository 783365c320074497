"""
Online file-migration policies and the serve-then-move simulation loop.

A step serves the request from the current position (cost d(pos, r)) and then
lets the policy move the file (cost D * d(pos, new)). Phase-based policies
only move at phase ends:

  MTM   phases of D requests, moves to the minimiser of the sum of distances.
  MTLM  phases of c0*D requests, minimises D*d(pos, x) + (c0+1)/c0 * sum d(x, r).
  DLM   after 1.75D requests evaluates g; moves to v_g if
        g(v_g) <= 1.5 [pos, R2] (short phase), otherwise waits 0.5D more
        requests and moves to the minimiser of h (long phase).
"""
import csv
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .conf import tolerance
from .constants import MigrationConstants, migration_constants
from .exceptions import InvalidPointError, PhaseError, PolicyError
from .instances import Instance, round_half_up
from .metric import MetricSpace, RequestMultiset, bracket_multiset, bracket_to_all

logger = logging.getLogger(__name__)

__all__ = [
    'MigrationConstants', 'migration_constants', 'PhaseBoundary', 'PhaseResult', 'RunRecord',
    'OnlinePolicy', 'FixedPhasePolicy', 'DlmPolicy', 'StayPolicy',
    'argmin_with_tiebreak', 'mtm_move', 'mtlm_move', 'stay_move',
    'mtm_policy', 'mtlm_policy', 'dlm_policy', 'stay_policy', 'fixed_phase_adapter',
    'dlm_phase', 'g_values', 'h_values', 'run_online', 'make_policy', 'write_run_csv',
]

SHORT = 'short'
LONG = 'long'
FIXED = 'fixed'
PARTIAL = 'partial'

# DLM: g(v) = [pos, v] + 2[v, R1] + [v, R2];  h(v) = [pos, v] + [v, R1] + 1.25[v, R2] + 0.75[v, R3]
G_WEIGHTS = (2.0, 1.0)
H_WEIGHTS = (1.0, 1.25, 0.75)
SHORT_THRESHOLD = 1.5


@dataclass(frozen=True)
class PhaseResult:
    target: int
    kind: str
    parts: tuple
    g_value: float
    threshold: float
    v_g: int
    h_value: Optional[float] = None
    v_h: Optional[int] = None
    partial: bool = False


@dataclass(frozen=True)
class PhaseBoundary:
    """Steps [first, last] (1-based) form one phase; the move happens at `last`."""

    first: int
    last: int
    kind: str
    start_position: int
    end_position: int
    result: Optional[PhaseResult] = None

    @property
    def length(self):
        return self.last - self.first + 1


@dataclass(frozen=True, eq=False)
class RunRecord:
    policy: str
    D: int
    requests: tuple
    positions: tuple
    serve_costs: tuple
    move_costs: tuple
    phase_boundaries: tuple = ()
    tail: Optional[PhaseBoundary] = None
    space: Optional[MetricSpace] = None

    @property
    def total_serve(self):
        return float(sum(self.serve_costs))

    @property
    def total_move(self):
        return float(sum(self.move_costs))

    @property
    def total_cost(self):
        return self.total_serve + self.total_move

    @property
    def steps(self):
        return len(self.requests)

    def step_cost(self, first, last):
        """Serve plus move cost over steps first..last (1-based, inclusive)."""
        return float(sum(self.serve_costs[first - 1:last]) + sum(self.move_costs[first - 1:last]))

    @property
    def tail_cost(self):
        if self.tail is None:
            return 0.0
        return self.step_cost(self.tail.first, self.tail.last)

    @property
    def phases(self):
        """PhaseResults of the complete phases (DLM only; None for fixed phases)."""
        return tuple(boundary.result for boundary in self.phase_boundaries)

    def phase_of_steps(self):
        """(phase_id, kind) for every step; tail steps get the 'partial' kind."""
        labels = [(None, None)] * self.steps
        for phase_id, boundary in enumerate(self.phase_boundaries):
            for s in range(boundary.first, boundary.last + 1):
                labels[s - 1] = (phase_id, boundary.kind)
        if self.tail is not None:
            for s in range(self.tail.first, self.tail.last + 1):
                labels[s - 1] = (len(self.phase_boundaries), PARTIAL)
        return labels


def argmin_with_tiebreak(values, current=None, tol=None):
    """Index of the minimum; ties go to `current`, then to the lowest index."""
    tol = tolerance() if tol is None else tol
    values = np.asarray(values, dtype=float)
    best = values.min()
    if current is not None and values[current] <= best + tol:
        return int(current)
    return int(np.flatnonzero(values <= best + tol)[0])


MoveRule = Callable[[int, RequestMultiset, MetricSpace], int]


def mtm_move(pos, R: RequestMultiset, space: MetricSpace) -> int:
    sums = bracket_to_all(space, R) * R.total / space.D
    return argmin_with_tiebreak(sums, pos)


def mtlm_move(pos, R: RequestMultiset, space: MetricSpace) -> int:
    c0 = migration_constants().c0
    sums = bracket_to_all(space, R) * R.total / space.D
    values = space.D * space.dist[pos] + (c0 + 1.0) / c0 * sums
    return argmin_with_tiebreak(values, pos)


def stay_move(pos, R, space):
    return pos


class OnlinePolicy(ABC):
    name = 'policy'

    def __init__(self, D=None):
        self.expected_D = D
        self.space = None
        self.position = None

    def reset(self, space: MetricSpace, start: int):
        if self.expected_D is not None and space.D != self.expected_D:
            raise PolicyError(f"{self.name} built for D={self.expected_D}, instance has D={space.D}")
        self.space = space
        self.position = start

    @abstractmethod
    def step(self, t: int, request: int):
        """Serve step t; return (new position, PhaseBoundary or None)."""

    def finish(self, steps: int) -> Optional[PhaseBoundary]:
        return None


class FixedPhasePolicy(OnlinePolicy):
    """Phases of round(c*D) requests; the move depends only on the position and the phase."""

    def __init__(self, move_rule: MoveRule, c: float, name=None, D=None):
        super().__init__(D)
        self.move_rule = move_rule
        self.c = c
        self.name = name or getattr(move_rule, '__name__', 'fixed-phase')
        self.phase_length = None
        self.window = []
        self.phase_first = 1

    def reset(self, space, start):
        super().reset(space, start)
        self.phase_length = max(1, round_half_up(self.c * space.D))
        self.window = []
        self.phase_first = 1

    def step(self, t, request):
        self.window.append(request)
        if len(self.window) < self.phase_length:
            return self.position, None
        phase = RequestMultiset.from_requests(self.window)
        start_position = self.position
        target = self.move_rule(start_position, phase, self.space)
        try:
            target = self.space.check_point(target)
        except InvalidPointError as exc:
            raise PolicyError(f"{self.name} moved to an invalid point: {exc}") from exc
        boundary = PhaseBoundary(self.phase_first, t, FIXED, start_position, target)
        self.window = []
        self.phase_first = t + 1
        self.position = target
        return target, boundary

    def finish(self, steps):
        if not self.window:
            return None
        return PhaseBoundary(self.phase_first, steps, PARTIAL, self.position, self.position)


class StayPolicy(OnlinePolicy):
    name = 'stay'

    def step(self, t, request):
        return self.position, None


def g_values(space, pos, R1, R2, weights=G_WEIGHTS):
    return (
        space.D * space.dist[pos]
        + weights[0] * bracket_to_all(space, R1)
        + weights[1] * bracket_to_all(space, R2)
    )


def h_values(space, pos, R1, R2, R3, weights=H_WEIGHTS):
    return (
        space.D * space.dist[pos]
        + weights[0] * bracket_to_all(space, R1)
        + weights[1] * bracket_to_all(space, R2)
        + weights[2] * bracket_to_all(space, R3)
    )


def dlm_part_lengths(D):
    if D % 4:
        raise PhaseError(f"DLM needs D divisible by 4, got D={D}")
    return D, 3 * D // 4, D // 2


def dlm_phase(pos, stream, space: MetricSpace, D=None) -> PhaseResult:
    """Decide one DLM phase from the requests issued since the phase started."""
    D = space.D if D is None else D
    tol = tolerance()
    n1, n2, n3 = dlm_part_lengths(D)
    stream = list(stream)
    if len(stream) < n1 + n2:
        parts = tuple(RequestMultiset.from_requests(p) for p in (stream[:n1], stream[n1:]) if p)
        return PhaseResult(pos, SHORT, parts, float('nan'), float('nan'), pos, partial=True)

    R1 = RequestMultiset.from_requests(stream[:n1])
    R2 = RequestMultiset.from_requests(stream[n1:n1 + n2])
    g = g_values(space, pos, R1, R2)
    v_g = argmin_with_tiebreak(g, pos, tol)
    threshold = SHORT_THRESHOLD * bracket_multiset(space, pos, R2)
    if g[v_g] <= threshold + tol:
        return PhaseResult(v_g, SHORT, (R1, R2), float(g[v_g]), threshold, v_g)

    if len(stream) < n1 + n2 + n3:
        parts = (R1, R2)
        if len(stream) > n1 + n2:
            parts += (RequestMultiset.from_requests(stream[n1 + n2:]),)
        return PhaseResult(pos, LONG, parts, float(g[v_g]), threshold, v_g, partial=True)

    R3 = RequestMultiset.from_requests(stream[n1 + n2:n1 + n2 + n3])
    h = h_values(space, pos, R1, R2, R3)
    v_h = argmin_with_tiebreak(h, pos, tol)
    return PhaseResult(v_h, LONG, (R1, R2, R3), float(g[v_g]), threshold, v_g, float(h[v_h]), v_h)


class DlmPolicy(OnlinePolicy):
    name = 'dlm'

    def reset(self, space, start):
        super().reset(space, start)
        self.n1, self.n2, self.n3 = dlm_part_lengths(space.D)
        self.window = []
        self.phase_first = 1

    def _close(self, t, result):
        boundary = PhaseBoundary(self.phase_first, t, result.kind, self.position, result.target, result)
        logger.debug(
            "dlm phase %d-%d %s: %s -> %s (g=%.6g, threshold=%.6g)",
            self.phase_first, t, result.kind, self.position, result.target,
            result.g_value, result.threshold,
        )
        self.window = []
        self.phase_first = t + 1
        self.position = result.target
        return result.target, boundary

    def step(self, t, request):
        self.window.append(request)
        size = len(self.window)
        if size == self.n1 + self.n2:
            result = dlm_phase(self.position, self.window, self.space)
            if result.kind == SHORT:
                return self._close(t, result)
        elif size == self.n1 + self.n2 + self.n3:
            return self._close(t, dlm_phase(self.position, self.window, self.space))
        return self.position, None

    def finish(self, steps):
        if not self.window:
            return None
        result = dlm_phase(self.position, self.window, self.space)
        return PhaseBoundary(self.phase_first, steps, PARTIAL, self.position, self.position, result)


def fixed_phase_adapter(move_rule: MoveRule, c: float, name=None) -> FixedPhasePolicy:
    return FixedPhasePolicy(move_rule, c, name=name)


def mtm_policy(D=None):
    return FixedPhasePolicy(mtm_move, 1.0, name='mtm', D=D)


def mtlm_policy(D=None):
    return FixedPhasePolicy(mtlm_move, migration_constants().c0, name='mtlm', D=D)


def dlm_policy(D=None):
    return DlmPolicy(D)


def stay_policy(D=None):
    return StayPolicy(D)


POLICIES = {
    'mtm': mtm_policy,
    'mtlm': mtlm_policy,
    'dlm': dlm_policy,
    'stay': stay_policy,
}


def make_policy(name, D=None):
    try:
        return POLICIES[name](D)
    except KeyError:
        raise PolicyError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def run_online(policy: OnlinePolicy, instance: Instance) -> RunRecord:
    space = instance.space
    D = space.D
    dist = space.dist
    policy.reset(space, instance.start)

    position = instance.start
    positions = [position]
    serve_costs = []
    move_costs = []
    boundaries = []
    for t, request in enumerate(instance.requests, start=1):
        serve_costs.append(float(dist[position, request]))
        target, boundary = policy.step(t, request)
        try:
            target = space.check_point(target)
        except InvalidPointError as exc:
            raise PolicyError(f"{policy.name} moved to an invalid point: {exc}") from exc
        move_costs.append(D * float(dist[position, target]))
        position = target
        positions.append(position)
        if boundary is not None:
            boundaries.append(boundary)

    tail = policy.finish(len(instance.requests))
    if tail is not None:
        logger.debug("%s: trailing partial phase of %d steps served without moving", policy.name, tail.length)
    return RunRecord(
        policy=policy.name,
        D=D,
        requests=tuple(instance.requests),
        positions=tuple(positions),
        serve_costs=tuple(serve_costs),
        move_costs=tuple(move_costs),
        phase_boundaries=tuple(boundaries),
        tail=tail,
        space=space,
    )


RUN_CSV_COLUMNS = (
    'step', 'request', 'position_before', 'position_after',
    'serve_cost', 'move_cost', 'phase_id', 'phase_kind',
)


def write_run_csv(record: RunRecord, instance: Instance, path):
    """One row per step, labels taken from the instance's metric."""
    space = instance.space
    labels = record.phase_of_steps()
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(RUN_CSV_COLUMNS)
        for t, request in enumerate(record.requests, start=1):
            phase_id, kind = labels[t - 1]
            writer.writerow([
                t,
                space.label(request),
                space.label(record.positions[t - 1]),
                space.label(record.positions[t]),
                repr(record.serve_costs[t - 1]),
                repr(record.move_costs[t - 1]),
                '' if phase_id is None else phase_id,
                kind or '',
            ])
    return path
