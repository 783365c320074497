"""
Per-phase accounting for DLM against an offline trajectory.

Every complete DLM phase must satisfy

    C_ALG(phase) + Phi_end <= 4 C_OPT(phase) + Phi_start,   Phi = 3 [dlm, op].

`verify_proof_chain` evaluates the intermediate inequalities of that bound one
link at a time. Each link is rhs - lhs of a single step of the chain and the
links telescope, so their sum is exactly the phase slack.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .algorithms import LONG, SHORT, RunRecord, g_values, h_values
from .conf import tolerance
from .exceptions import InstanceError, PhaseError
from .metric import MetricSpace, bracket, bracket_path
from .offline import OptResult, check_opt_lower_bound, segment_costs

logger = logging.getLogger(__name__)

POTENTIAL_WEIGHT = 3.0


@dataclass(frozen=True, eq=False)
class PhaseLedger:
    phase_id: int
    kind: str
    first: int
    last: int
    dlm_start: int
    dlm_end: int
    opt_marks: tuple
    parts: tuple
    part_requests: tuple
    opt_segments: tuple
    c_alg: float
    c_opt: float
    c_opt_parts: tuple
    phi_start: float
    phi_end: float
    space: MetricSpace = field(repr=False, default=None)

    @property
    def length(self):
        return self.last - self.first + 1


@dataclass(frozen=True)
class ChainLink:
    name: str
    group: str
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs


@dataclass(frozen=True)
class CompetitiveReport:
    total_alg: float
    total_opt: float
    ratio: Optional[float]
    additive_offset: float
    phase_slacks: tuple = ()
    chain_min_slacks: tuple = ()
    negative_phases: tuple = ()
    tail_cost: float = 0.0
    warnings: tuple = ()

    @property
    def min_slack(self):
        return min(self.phase_slacks) if self.phase_slacks else None

    @property
    def passed(self):
        return not self.negative_phases


def potential(space, dlm, op):
    return POTENTIAL_WEIGHT * bracket(space, dlm, op)


def _part_bounds(kind, D):
    sizes = (D, 3 * D // 4) if kind == SHORT else (D, 3 * D // 4, D // 2)
    bounds = []
    offset = 0
    for size in sizes:
        bounds.append((offset, offset + size))
        offset += size
    return bounds


def phase_partition(run: RunRecord, opt: OptResult) -> list:
    """One ledger per complete DLM phase, OPT marks read off `opt`."""
    if run.space is None:
        raise InstanceError("run record carries no metric space")
    if len(opt.trajectory) != len(run.positions):
        raise InstanceError(
            f"OPT trajectory has {len(opt.trajectory)} positions, run has {len(run.positions)}"
        )
    space = run.space
    D = run.D
    if D % 4:
        raise PhaseError(f"DLM phases need D divisible by 4, got D={D}")

    ledgers = []
    for phase_id, boundary in enumerate(run.phase_boundaries):
        if boundary.kind not in (SHORT, LONG):
            raise PhaseError(f"phase {phase_id} is a {boundary.kind!r} phase, not a DLM phase")
        t = boundary.first - 1
        bounds = _part_bounds(boundary.kind, D)
        if bounds[-1][1] != boundary.length:
            raise PhaseError(
                f"{boundary.kind} phase {phase_id} has {boundary.length} steps, expected {bounds[-1][1]}"
            )
        marks = (opt.trajectory[t],) + tuple(opt.trajectory[t + hi] for _, hi in bounds)
        part_requests = tuple(tuple(run.requests[t + lo:t + hi]) for lo, hi in bounds)
        segments = tuple(tuple(opt.trajectory[t + lo:t + hi + 1]) for lo, hi in bounds)
        parts = boundary.result.parts if boundary.result is not None else ()
        c_opt_parts = tuple(
            sum(segment_costs(space, seg, reqs)) for seg, reqs in zip(segments, part_requests)
        )
        ledgers.append(PhaseLedger(
            phase_id=phase_id,
            kind=boundary.kind,
            first=boundary.first,
            last=boundary.last,
            dlm_start=boundary.start_position,
            dlm_end=boundary.end_position,
            opt_marks=marks,
            parts=parts,
            part_requests=part_requests,
            opt_segments=segments,
            c_alg=run.step_cost(boundary.first, boundary.last),
            c_opt=float(sum(c_opt_parts)),
            c_opt_parts=c_opt_parts,
            phi_start=potential(space, boundary.start_position, marks[0]),
            phi_end=potential(space, boundary.end_position, marks[-1]),
            space=space,
        ))
    if run.tail is not None:
        logger.debug(
            "phase_partition: steps %d-%d form a partial phase and are not verified",
            run.tail.first, run.tail.last,
        )
    return ledgers


def verify_dlm_phase(ledger: PhaseLedger) -> float:
    return 4.0 * ledger.c_opt + ledger.phi_start - ledger.c_alg - ledger.phi_end


def _opt_bound_links(ledger):
    """4 C_OPT of each part against its lower bound."""
    links = []
    for i, (seg, reqs) in enumerate(zip(ledger.opt_segments, ledger.part_requests), start=1):
        slack = check_opt_lower_bound(seg, reqs, ledger.space)
        lhs = 4.0 * ledger.c_opt_parts[i - 1]
        links.append(ChainLink(f"opt bound on part {i}", 'opt-bound', lhs - slack, lhs))
    return links


def _short_chain(ledger):
    s = ledger.space
    P = lambda *path: bracket_path(s, path)
    B = lambda x, y: bracket(s, x, y)
    dlm, vg = ledger.dlm_start, ledger.dlm_end
    op0, op1, op2 = ledger.opt_marks
    R1, R2 = ledger.parts

    g = lambda v: float(g_values(s, dlm, R1, R2)[v])
    g_vg = g(vg)
    g_op0 = g(op0)
    serve_part = P(dlm, R1) + 0.75 * P(dlm, R2) + 2 * P(op2, R1) + P(op2, R2)
    rhs_split = P(dlm, op0, R1) + 0.75 * P(dlm, op0, op1, R2) + 2 * P(op2, op1, R1) + P(op2, R2)
    via_op0 = 0.5 * g_op0 + 0.75 * P(dlm, R2)
    rhs_g = 0.5 * P(dlm, op0, R1, op0, op1, op2, R2) + 0.75 * P(dlm, op0, op1, R2)
    budget = (
        3 * B(dlm, op0) + 2 * B(op0, op1) + 2 * P(op0, R1, op1)
        + 2.5 * B(op1, op2) + 1.5 * P(op1, R2, op2)
    )

    links = [
        ChainLink("final potential through the parts", 'exit-triangle',
                  3 * B(vg, op2), 2 * P(vg, R1, op2) + P(vg, R2, op2)),
        ChainLink("serve costs routed through OPT marks", 'serve-split',
                  serve_part, rhs_split),
        ChainLink("g(v_g) against g(op0) and the short condition", 'short-condition',
                  g_vg, via_op0),
        ChainLink("g(op0) routed through the OPT marks", 'g-triangle',
                  via_op0, rhs_g),
        ChainLink("collected terms against the budget", 'budget',
                  rhs_split + rhs_g, budget),
    ]
    return links + _opt_bound_links(ledger)


def _long_chain(ledger):
    s = ledger.space
    P = lambda *path: bracket_path(s, path)
    B = lambda x, y: bracket(s, x, y)
    dlm, vh = ledger.dlm_start, ledger.dlm_end
    op0, op1, op2, op3 = ledger.opt_marks
    R1, R2, R3 = ledger.parts

    h = h_values(s, dlm, R1, R2, R3)
    g_op0 = float(g_values(s, dlm, R1, R2)[op0])
    rhs_serve = P(dlm, op0, R1) + 0.5 * P(dlm, op0, R1, op0, op1, R2) + 0.5 * P(dlm, op0, op1, op2, R3)
    exit_part = P(op3, R1) + 1.25 * P(op3, R2) + 0.75 * P(op3, R3)
    rhs_exit = P(op3, op2, op1, R1) + 1.25 * P(op3, op2, R2) + 0.75 * P(op3, R3)
    h_split = (
        P(dlm, op0, op1) + P(op1, R1) + P(op1, R2) + 0.25 * P(op1, op2, R2)
        + 0.5 * P(op1, op2, R3) + 0.25 * P(op1, op2, op3, R3)
    )
    budget = (
        3 * B(dlm, op0) + 2 * B(op0, op1) + 2 * P(op0, R1, op1)
        + 2.5 * B(op1, op2) + 1.5 * P(op1, R2, op2)
        + 3 * B(op2, op3) + P(op2, R3, op3)
    )

    links = [
        ChainLink("final potential through the parts", 'exit-triangle',
                  3 * B(vh, op3), P(vh, R1, op3) + 1.25 * P(vh, R2, op3) + 0.75 * P(vh, R3, op3)),
        ChainLink("second part via the long condition", 'long-condition',
                  0.75 * P(dlm, R2), 0.5 * g_op0),
        ChainLink("g(op0) routed through the OPT marks", 'serve-split',
                  0.5 * g_op0, 0.5 * P(dlm, op0, R1, op0, op1, R2)),
        ChainLink("first part through op0", 'serve-split',
                  P(dlm, R1), P(dlm, op0, R1)),
        ChainLink("third part through the OPT marks", 'serve-split',
                  0.5 * P(dlm, R3), 0.5 * P(dlm, op0, op1, op2, R3)),
        ChainLink("serve from the last OPT mark walked back", 'exit-split',
                  exit_part, rhs_exit),
        ChainLink("h(v_h) against h(op1)", 'h-minimizer',
                  float(h[vh]), float(h[op1])),
        ChainLink("[op1, dlm] through op0", 'h-split',
                  B(op1, dlm), P(op1, op0, dlm)),
        ChainLink("1.25 [op1, R2] split at op2", 'h-split',
                  1.25 * P(op1, R2), P(op1, R2) + 0.25 * P(op1, op2, R2)),
        ChainLink("0.75 [op1, R3] split at op2 and op3", 'h-split',
                  0.75 * P(op1, R3), 0.5 * P(op1, op2, R3) + 0.25 * P(op1, op2, op3, R3)),
        ChainLink("collected terms against the budget", 'budget',
                  rhs_serve + rhs_exit + h_split, budget),
    ]
    return links + _opt_bound_links(ledger)


def verify_proof_chain(ledger: PhaseLedger) -> list:
    if len(ledger.parts) != len(ledger.opt_marks) - 1:
        raise PhaseError(f"ledger {ledger.phase_id} is missing its request parts")
    if ledger.kind == SHORT:
        return _short_chain(ledger)
    if ledger.kind == LONG:
        return _long_chain(ledger)
    raise PhaseError(f"no proof chain for a {ledger.kind!r} phase")


def chain_consistency(ledger: PhaseLedger, links) -> float:
    """Sum of link slacks minus the phase slack; zero up to rounding."""
    return sum(link.slack for link in links) - verify_dlm_phase(ledger)


def competitive_report(runs, tol=None) -> CompetitiveReport:
    """Aggregate (RunRecord, OptResult) pairs; DLM runs are also verified phase by phase."""
    if not runs:
        raise InstanceError("competitive_report needs at least one run")
    tol = tolerance() if tol is None else tol

    total_alg = 0.0
    total_opt = 0.0
    offset = 0.0
    tail = 0.0
    slacks = []
    chain_mins = []
    negative = []
    warnings = []
    for index, (run, opt) in enumerate(runs):
        total_alg += run.total_cost
        total_opt += opt.cost
        tail += run.tail_cost
        if run.space is not None:
            offset += (
                potential(run.space, run.positions[0], opt.trajectory[0])
                - potential(run.space, run.positions[-1], opt.trajectory[-1])
            )
        if run.policy != 'dlm':
            continue
        for ledger in phase_partition(run, opt):
            slack = verify_dlm_phase(ledger)
            links = verify_proof_chain(ledger)
            slacks.append(slack)
            chain_mins.append(min(link.slack for link in links))
            if slack < -tol:
                negative.append((index, ledger.phase_id))
                logger.warning(
                    "run %d phase %d (%s): negative slack %.3g", index, ledger.phase_id, ledger.kind, slack
                )

    if total_opt > 0:
        ratio = total_alg / total_opt
    elif total_alg > 0:
        ratio = math.inf
        warnings.append("OPT cost is zero while the policy paid a positive cost")
        logger.warning("competitive ratio is infinite: total_alg=%.6g, total_opt=0", total_alg)
    else:
        ratio = None
        warnings.append("both costs are zero; the ratio is undefined")

    return CompetitiveReport(
        total_alg=total_alg,
        total_opt=total_opt,
        ratio=ratio,
        additive_offset=offset,
        phase_slacks=tuple(slacks),
        chain_min_slacks=tuple(chain_mins),
        negative_phases=tuple(negative),
        tail_cost=tail,
        warnings=tuple(warnings),
    )


LEDGER_CSV_COLUMNS = ('phase_id', 'kind', 'c_alg', 'c_opt', 'phi_start', 'phi_end', 'slack', 'min_chain_slack')


def ledger_rows(ledgers):
    rows = []
    for ledger in ledgers:
        links = verify_proof_chain(ledger)
        rows.append({
            'phase_id': ledger.phase_id,
            'kind': ledger.kind,
            'c_alg': ledger.c_alg,
            'c_opt': ledger.c_opt,
            'phi_start': ledger.phi_start,
            'phi_end': ledger.phi_end,
            'slack': verify_dlm_phase(ledger),
            'min_chain_slack': min(link.slack for link in links),
        })
    return rows


def write_ledger_csv(ledgers, path):
    with open(path, 'w', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=LEDGER_CSV_COLUMNS)
        writer.writeheader()
        for row in ledger_rows(ledgers):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return path
