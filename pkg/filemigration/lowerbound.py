"""
Adversarial plays against fixed-phase policies in the dynamic graph model.

Between phases the adversary rebuilds the graph, keeping only the distance
between ALG's and OPT's files. That distance defines the game state:

    S      ALG and OPT share a point
    A(l)   distance (2 alpha)^l, l = 0..L
    F      any other positive distance

A linear play leaves S, bipartite plays climb the A(l) ladder and a finishing
play returns to S. The gain of a play is C_ALG - (R0 - eps) C_OPT.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .algorithms import FixedPhasePolicy, run_online
from .analysis import CompetitiveReport
from .conf import tolerance
from .constants import migration_constants
from .exceptions import InstanceError, NonCompetitivePolicyError, PlayStateError, PolicyError
from .instances import Instance, bipartite_instance, bipartite_layout, linear_instance, round_half_up, two_point_space
from .offline import trajectory_cost

logger = logging.getLogger(__name__)

LINEAR = 'linear'
BIPARTITE = 'bipartite'
FINISHING = 'finishing'

DEFAULT_MAX_LOOPS = 5
DEFAULT_MAX_PHASES = 100


@dataclass(frozen=True)
class GameState:
    tag: str
    dist: float = 0.0
    level: Optional[int] = None

    @classmethod
    def S(cls):
        return cls('S', 0.0)

    @classmethod
    def A(cls, level):
        return cls('A', (2 * migration_constants().alpha) ** level, level)

    @classmethod
    def F(cls, dist):
        if dist <= 0:
            raise PlayStateError(f"state F needs a positive distance, got {dist}")
        return cls('F', float(dist))

    def __str__(self):
        if self.tag == 'A':
            return f"A{self.level}"
        if self.tag == 'F':
            return f"F({self.dist:.6g})"
        return 'S'


def classify_distance(dist, L, tol=None) -> GameState:
    tol = tolerance() if tol is None else tol
    if dist <= tol:
        return GameState.S()
    ratio = 2 * migration_constants().alpha
    for level in range(L + 1):
        target = ratio ** level
        if abs(dist - target) <= tol * max(1.0, target):
            return GameState.A(level)
    return GameState.F(dist)


@dataclass(frozen=True, eq=False)
class PlayOutcome:
    kind: str
    state_in: GameState
    next: GameState
    c_alg: float
    c_opt: float
    eps: float
    bound: float
    phases_used: int = 1
    case: str = ''
    flags: tuple = ()
    alg_trajectory: tuple = field(default=(), repr=False)
    opt_trajectory: tuple = field(default=(), repr=False)
    instance: Optional[Instance] = field(default=None, repr=False)

    @property
    def gain(self):
        return self.c_alg - (migration_constants().R0 - self.eps) * self.c_opt

    def as_row(self):
        return {
            'kind': self.kind,
            'state_in': str(self.state_in),
            'state_out': str(self.next),
            'case': self.case,
            'c_alg': self.c_alg,
            'c_opt': self.c_opt,
            'gain': self.gain,
            'bound': self.bound,
            'phases_used': self.phases_used,
            'flags': list(self.flags),
        }


def epsilon(L: int, k: int) -> float:
    if L < 1 or k < 3:
        raise InstanceError(f"epsilon needs L >= 1 and k >= 3, got L={L}, k={k}")
    const = migration_constants()
    two_alpha = 2 * const.alpha
    return max(two_alpha ** L / (1 - two_alpha), 4 * const.R0 / (k + 4))


def _bound_terms(a, c):
    return max(a / (1 - a), (c + 2) / (c * a) + 1, c * (a + 1) + 1)


def L_of_c(c: float, grid_points=4000) -> float:
    """inf over a in (0, 1) of the three-term maximum: grid search, then bounded refinement."""
    if c <= 0:
        raise InstanceError(f"c must be positive, got {c}")
    grid = np.linspace(0.0, 1.0, grid_points + 2)[1:-1]
    values = np.maximum.reduce([grid / (1 - grid), (c + 2) / (c * grid) + 1, c * (grid + 1) + 1])
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    refined = minimize_scalar(lambda a: _bound_terms(a, c), bounds=(lo, hi), method='bounded',
                              options={'xatol': 1e-12})
    return float(min(values[i], refined.fun))


def min_L_over_c(lo=0.5, hi=4.0, grid_points=400):
    """(c, L(c)) at the minimum over c in [lo, hi]."""
    cs = np.linspace(lo, hi, grid_points)
    values = np.array([L_of_c(c) for c in cs])
    i = int(np.argmin(values))
    refined = minimize_scalar(L_of_c, bounds=(cs[max(i - 1, 0)], cs[min(i + 1, len(cs) - 1)]),
                              method='bounded', options={'xatol': 1e-9})
    if refined.fun < values[i]:
        return float(refined.x), float(refined.fun)
    return float(cs[i]), float(values[i])


def _phase_length(policy, c, D):
    if not isinstance(policy, FixedPhasePolicy):
        raise PolicyError(f"plays need a fixed-phase policy, got {type(policy).__name__}")
    length = round_half_up(c * D)
    own = max(1, round_half_up(policy.c * D))
    if own != length:
        raise PolicyError(f"{policy.name} uses phases of {own} requests, the play needs {length}")
    return length


def _one_phase(policy, instance):
    run = run_online(policy, instance)
    if len(run.phase_boundaries) != 1 or run.tail is not None:
        raise PlayStateError(f"{policy.name} did not complete exactly one phase on the play instance")
    return run


def _check_state(state, expected_tag, play):
    if state is not None and state.tag != expected_tag:
        raise PlayStateError(f"{play} play cannot start in state {state}")


def linear_play(policy, c, D, L, k, state=None) -> PlayOutcome:
    """Two points a, b at distance 1; (c-t)D requests at a, then the rest at b."""
    _check_state(state, 'S', LINEAR)
    const = migration_constants()
    flags = ()
    if c < const.cT:
        flags = ('below-cT',)
        logger.warning("linear play with c=%.6g below c_T=%.6g; the play bound is not guaranteed", c, const.cT)
    instance = linear_instance(c, D)
    _phase_length(policy, c, D)
    run = _one_phase(policy, instance)
    a, b = instance.metadata['layout']['a'], instance.metadata['layout']['b']
    n_a = instance.requests.count(a)
    T = len(instance)

    if run.positions[-1] == b:
        case = 'moved'
        opt = (a,) * (T + 1)
    else:
        case = 'stayed'
        # serve the last request at a, then move to b
        switch = max(n_a, 1)
        opt = (a,) * switch + (b,) * (T + 1 - switch)
    c_opt = trajectory_cost(instance.space, a, instance.requests, opt)
    eps = epsilon(L, k)
    two_alpha = 2 * const.alpha
    bound = -sum(two_alpha ** i for i in range(L)) * D
    outcome = PlayOutcome(
        kind=LINEAR, state_in=GameState.S(),
        next=classify_distance(instance.space.dist[run.positions[-1], opt[-1]], L),
        c_alg=run.total_cost, c_opt=c_opt, eps=eps, bound=bound, case=case, flags=flags,
        alg_trajectory=run.positions, opt_trajectory=opt, instance=instance,
    )
    logger.debug("linear play: %s, gain %.6g (bound %.6g)", case, outcome.gain, bound)
    return outcome


def bipartite_play(policy, k, f, c, D, level, L, order=None, state=None) -> PlayOutcome:
    """a joined to Q by f, Q joined to S by alpha*f; requests round-robin over S."""
    _check_state(state, 'A', BIPARTITE)
    if level >= L:
        raise PlayStateError(f"bipartite play needs level < L, got level={level}, L={L}; use a finishing play")
    const = migration_constants()
    instance = bipartite_instance(k, f, c, D, const.alpha)
    if order is not None:
        layout = instance.metadata['layout']
        relabel = dict(zip(layout['S'], (layout['S'][i] for i in order)))
        instance = Instance(instance.space, instance.start,
                            tuple(relabel[r] for r in instance.requests), instance.metadata)
    _phase_length(policy, c, D)
    run = _one_phase(policy, instance)

    space = instance.space
    layout = bipartite_layout(k)
    target = run.positions[-1]
    T = len(instance)

    # OPT stays on one q; the farthest from ALG's final point, then the cheapest
    best = None
    for q in layout['Q']:
        trajectory = (q,) * (T + 1)
        cost = trajectory_cost(space, q, instance.requests, trajectory)
        key = (-space.dist[target, q], cost, q)
        if best is None or key < best[0]:
            best = (key, trajectory, cost)
    _, opt, c_opt = best

    if target == layout['a']:
        case, bound = 'stay', 0.0
    elif target in layout['Q']:
        case, bound = 'to-Q', f * D
    elif target in layout['S']:
        case, bound = 'to-S', (1 + const.alpha) * f * D
    else:
        raise PlayStateError(f"policy moved to {target}, outside the bipartite graph")

    outcome = PlayOutcome(
        kind=BIPARTITE, state_in=GameState.A(level),
        next=classify_distance(space.dist[target, opt[-1]], L),
        c_alg=run.total_cost, c_opt=c_opt, eps=epsilon(L, k), bound=bound, case=case,
        alg_trajectory=run.positions, opt_trajectory=opt, instance=instance,
    )
    logger.debug("bipartite play at A%d: %s -> %s, gain %.6g", level, case, outcome.next, outcome.gain)
    return outcome


def finishing_play(policy, f, c, D, max_phases=DEFAULT_MAX_PHASES, eps=0.0, state=None) -> PlayOutcome:
    """Two points at distance f, all requests at OPT's point, repeated until ALG migrates."""
    if state is not None and state.tag not in ('A', 'F'):
        raise PlayStateError(f"finishing play cannot start in state {state}")
    if f <= 0:
        raise PlayStateError(f"finishing play needs a positive distance, got f={f}")
    n = _phase_length(policy, c, D)
    space = two_point_space(f, D, names=('v_alg', 'v_opt'))
    alg, opt_point = 0, 1

    position = alg
    positions = [alg]
    c_alg = 0.0
    for phase in range(1, max_phases + 1):
        run = _one_phase(policy, Instance(space, position, (opt_point,) * n))
        c_alg += run.total_cost
        positions.extend(run.positions[1:])
        position = run.positions[-1]
        if position == opt_point:
            break
    else:
        raise NonCompetitivePolicyError(
            f"{policy.name} never migrated within {max_phases} finishing phases",
            phases=max_phases, c_alg=c_alg,
        )

    requests = (opt_point,) * len(positions[1:])
    c_eff = n / D
    return PlayOutcome(
        kind=FINISHING, state_in=state or classify_distance(f, 0), next=GameState.S(),
        c_alg=c_alg, c_opt=0.0, eps=eps, bound=(c_eff + 1) * f * D, phases_used=phase,
        case=f"migrated after {phase} phase{'s' if phase > 1 else ''}",
        alg_trajectory=tuple(positions), opt_trajectory=(opt_point,) * len(positions),
        instance=Instance(space, alg, requests, {'generator': 'finishing', 'params': {'f': f, 'c': c, 'D': D}}),
    )


def is_transition(outcome: PlayOutcome) -> bool:
    """A play that leaves its state for a different A state."""
    return outcome.next.tag == 'A' and outcome.next != outcome.state_in


@dataclass(frozen=True)
class EpochSummary:
    index: int
    plays: int
    c_alg: float
    c_opt: float
    gain: float
    closed_early: bool = False
    transition_cost: float = 0.0


@dataclass
class EpochLedger:
    L: int
    k: int
    c: float
    D: int
    eps: float
    plays: list = field(default_factory=list)
    epochs: list = field(default_factory=list)

    @property
    def total_alg(self):
        return sum(outcome.c_alg for _, outcome in self.plays)

    @property
    def total_opt(self):
        return sum(outcome.c_opt for _, outcome in self.plays)

    @property
    def ratio(self):
        opt = self.total_opt
        if opt > 0:
            return self.total_alg / opt
        return math.inf if self.total_alg > 0 else None

    @property
    def transition_cost(self):
        """OPT cost of the plays that climb to a new A state in epochs stuck looping there."""
        return sum(e.transition_cost for e in self.epochs)

    @property
    def threshold(self):
        return migration_constants().R0 - self.eps

    def report(self) -> CompetitiveReport:
        warnings = tuple(
            f"epoch {e.index} closed after the loop limit; its gain {e.gain:.6g} may be negative "
            f"and its transition plays cost OPT {e.transition_cost:.6g}"
            for e in self.epochs if e.closed_early
        )
        return CompetitiveReport(
            total_alg=self.total_alg, total_opt=self.total_opt, ratio=self.ratio,
            additive_offset=0.0, warnings=warnings,
        )

    def rows(self):
        return [
            dict(epoch=epoch, play=i, transition=self.epochs[epoch].closed_early and is_transition(outcome),
                 **outcome.as_row())
            for i, (epoch, outcome) in enumerate(self.plays)
        ]


def run_epochs(policy, L, k, c, D, num_epochs, seed=0, max_loops=DEFAULT_MAX_LOOPS,
               max_phases=DEFAULT_MAX_PHASES) -> EpochLedger:
    """S -> linear -> bipartite ladder -> finishing -> S, num_epochs times."""
    if num_epochs < 1:
        raise InstanceError("run_epochs needs at least one epoch")
    eps = epsilon(L, k)
    rng = np.random.default_rng(seed)
    ledger = EpochLedger(L=L, k=k, c=c, D=D, eps=eps)

    for epoch in range(num_epochs):
        outcomes = [linear_play(policy, c, D, L, k, state=GameState.S())]
        state = outcomes[-1].next
        loops = 0
        closed_early = False
        while state.tag == 'A' and state.level < L:
            outcome = bipartite_play(policy, k, state.dist, c, D, state.level, L,
                                     order=rng.permutation(k), state=state)
            outcomes.append(outcome)
            loops = loops + 1 if outcome.next == state else 0
            state = outcome.next
            if loops >= max_loops:
                closed_early = True
                break
        if state.tag != 'S':
            outcomes.append(finishing_play(policy, state.dist, c, D, max_phases, eps, state=state))
        for outcome in outcomes:
            ledger.plays.append((epoch, outcome))
        ledger.epochs.append(EpochSummary(
            index=epoch,
            plays=len(outcomes),
            c_alg=sum(o.c_alg for o in outcomes),
            c_opt=sum(o.c_opt for o in outcomes),
            gain=sum(o.gain for o in outcomes),
            closed_early=closed_early,
            transition_cost=sum(o.c_opt for o in outcomes if is_transition(o)) if closed_early else 0.0,
        ))
    logger.info("run_epochs: %d epochs, ratio %.6g (threshold %.6g)", num_epochs, ledger.ratio, ledger.threshold)
    return ledger


@dataclass(frozen=True)
class StateGraphReport:
    L: int
    c: float
    eps: float
    ladder_gain: float
    detour_gains: tuple
    closed_form: float

    @property
    def min_gain(self):
        return min((self.ladder_gain,) + self.detour_gains)


def verify_state_graph(L, k, c) -> StateGraphReport:
    """Closed-form gains (units of D) of the two closed paths from S back to S."""
    const = migration_constants()
    if c < const.cT - tolerance():
        raise PlayStateError(f"the state graph bound needs c >= c_T = {const.cT:.6g}, got {c}")
    two_alpha = 2 * const.alpha
    alpha = const.alpha
    linear = -sum(two_alpha ** i for i in range(L))
    ladder = linear + sum(two_alpha ** level for level in range(L))
    detours = tuple(
        linear + sum(two_alpha ** level for level in range(m))
        + (1 + alpha) * two_alpha ** m + (c + 1) * 3 * alpha * two_alpha ** m
        for m in range(L)
    )
    report = StateGraphReport(
        L=L, c=c, eps=epsilon(L, k), ladder_gain=ladder, detour_gains=detours,
        closed_form=(1 + alpha) + (c + 1) * 3 * alpha - 1 / (1 - two_alpha),
    )
    if report.min_gain < -tolerance():
        logger.warning("state graph has a closed path with negative gain %.6g", report.min_gain)
    return report


class RandomMoveRule:
    """Seeded move rule that jumps to a uniformly random point."""

    def __init__(self, seed, stay_probability=0.0):
        self.rng = np.random.default_rng(seed)
        self.stay_probability = stay_probability
        self.__name__ = f"random-{seed}"

    def __call__(self, pos, R, space):
        if self.rng.random() < self.stay_probability:
            return pos
        return int(self.rng.integers(0, space.n))


EPOCH_CSV_COLUMNS = (
    'epoch', 'play', 'kind', 'state_in', 'state_out', 'case', 'c_alg', 'c_opt', 'gain', 'bound', 'transition',
)


def write_epoch_csv(ledger: EpochLedger, path):
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=EPOCH_CSV_COLUMNS, extrasaction='ignore')
        writer.writeheader()
        for row in ledger.rows():
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path
