"""
Exact offline optimum and the OPT lower bound over short request segments.

OPT serves r_t from op_{t-1} and then moves to op_t, paying
d(op_{t-1}, r_t) + D * d(op_{t-1}, op_t). The DP runs in O(T n^2).
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import InstanceError, PhaseError
from .instances import Instance
from .metric import MetricSpace, RequestMultiset, bracket, bracket_multiset

logger = logging.getLogger(__name__)

# exhaustive enumeration refuses more trajectories than this
MAX_ENUMERATED = 2_000_000


@dataclass(frozen=True)
class OptResult:
    cost: float
    trajectory: tuple
    serve_cost: float = 0.0
    move_cost: float = 0.0
    free_start: bool = False

    @property
    def start(self):
        return self.trajectory[0]

    def mark(self, step):
        """Position after `step` requests."""
        return self.trajectory[step]

    def segment(self, first, last):
        """Positions op_{first-1} .. op_last for steps first..last (1-based)."""
        return self.trajectory[first - 1:last + 1]


def segment_costs(space: MetricSpace, trajectory: Sequence[int], requests: Sequence[int]):
    """(serve, move) of a trajectory of len(requests) + 1 positions."""
    if len(trajectory) != len(requests) + 1:
        raise InstanceError(
            f"trajectory has {len(trajectory)} positions for {len(requests)} requests"
        )
    if not requests:
        return 0.0, 0.0
    pos = np.asarray(trajectory, dtype=int)
    req = np.asarray(requests, dtype=int)
    serve = float(space.dist[pos[:-1], req].sum())
    move = space.D * float(space.dist[pos[:-1], pos[1:]].sum())
    return serve, move


def trajectory_cost(space: MetricSpace, start: int, requests: Sequence[int], trajectory: Sequence[int]) -> float:
    if trajectory and trajectory[0] != start:
        raise InstanceError(f"trajectory starts at {trajectory[0]}, not at {start}")
    serve, move = segment_costs(space, trajectory, requests)
    return serve + move


def opt_dp(instance: Instance, start=None, free_start=False) -> OptResult:
    """C_t(v) = min_u C_{t-1}(u) + d(u, r_t) + D d(u, v); ties stay put, then lowest index."""
    space = instance.space
    dist = space.dist
    n = space.n
    start = instance.start if start is None else space.check_point(start)
    requests = instance.requests
    T = len(requests)

    if free_start:
        cost = np.zeros(n)
    else:
        cost = np.full(n, np.inf)
        cost[start] = 0.0
    if T == 0:
        return OptResult(0.0, (start,), free_start=free_start)

    moves = space.D * dist
    back = np.empty((T, n), dtype=int)
    columns = np.arange(n)
    for t, request in enumerate(requests):
        total = (cost + dist[:, request])[:, None] + moves
        best_from = np.argmin(total, axis=0)
        best = total[best_from, columns]
        stay = total[columns, columns] <= best
        back[t] = np.where(stay, columns, best_from)
        cost = best

    # same rule for the end point: a tied end reached by staying wins
    tied = np.flatnonzero(cost <= cost.min())
    staying = tied[back[-1, tied] == tied]
    end = int(staying[0] if staying.size else tied[0])
    trajectory = [end]
    for t in range(T - 1, -1, -1):
        trajectory.append(int(back[t, trajectory[-1]]))
    trajectory.reverse()

    serve, move = segment_costs(space, trajectory, requests)
    logger.debug("opt_dp: T=%d n=%d cost=%.6g", T, n, cost[end])
    return OptResult(float(cost[end]), tuple(trajectory), serve, move, free_start)


def enumerate_opt(instance: Instance, free_start=False) -> OptResult:
    """Brute force over every trajectory; the oracle for opt_dp on tiny instances."""
    space = instance.space
    n = space.n
    T = len(instance.requests)
    starts = range(n) if free_start else [instance.start]
    count = len(starts) * n ** T
    if count > MAX_ENUMERATED:
        raise InstanceError(f"{count} trajectories are too many to enumerate")
    if T == 0:
        return OptResult(0.0, (instance.start,), free_start=free_start)

    # one column per trajectory, one row per position op_0 .. op_T
    grid = np.indices((len(starts),) + (n,) * T).reshape(T + 1, -1)
    grid[0] = np.asarray(starts)[grid[0]]
    req = np.asarray(instance.requests, dtype=int)[:, None]
    serve = space.dist[grid[:-1], req].sum(axis=0)
    move = space.D * space.dist[grid[:-1], grid[1:]].sum(axis=0)
    total = serve + move
    best = int(np.argmin(total))
    return OptResult(
        float(total[best]),
        tuple(int(p) for p in grid[:, best]),
        float(serve[best]),
        float(move[best]),
        free_start,
    )


def check_opt_lower_bound(traj_segment: Sequence[int], R: Sequence[int], space: MetricSpace, D=None) -> float:
    """4 C_OPT(R) - (2|R|/D) [op_t, R, op_end] - (4 - 2|R|/D) [op_t, op_end]."""
    D = space.D if D is None else D
    if D != space.D:
        raise PhaseError(f"segment checked with D={D} on a space with D={space.D}")
    m = len(R)
    if m > 2 * D:
        raise PhaseError(f"the bound needs at most 2D = {2 * D} requests, got {m}")
    serve, move = segment_costs(space, traj_segment, R)
    if m == 0:
        return 0.0
    first, last = traj_segment[0], traj_segment[-1]
    multiset = RequestMultiset.from_requests(R)
    weight = 2.0 * m / D
    rhs = (
        weight * (bracket_multiset(space, first, multiset) + bracket_multiset(space, last, multiset))
        + (4.0 - weight) * bracket(space, first, last)
    )
    return 4.0 * (serve + move) - rhs
