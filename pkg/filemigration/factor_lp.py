"""
Factor-revealing LPs for one phase of MTLM-like and DLM-like algorithms.

Variables are average distances between the phase's named elements (points of
ALG and OPT, and the request multisets of the phase) plus cost scalars. Every
constraint holds on any concrete phase of any metric, so the optimum bounds the
amortised cost per unit of OPT cost from above.
"""
import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .constants import migration_constants
from .exceptions import LpModelError, SolverError
from .metric import RequestMultiset, bracket_pair
from .offline import segment_costs
from .simplex import (
    EQ, GE, INFEASIBLE, LE, OPTIMAL, SOLVER_FAILURE, UNBOUNDED,
    LinearExpr, LpModel, LpSolution, solve_lp,
)

logger = logging.getLogger(__name__)

DEFINITION = 'definition'
NORMALIZATION = 'normalization'
OPT_MOVE = 'opt_move'
OPT_BOUND = 'opt_bound'
MINIMIZER = 'minimizer'
TRIANGLE = 'triangle'
NONNEG = 'nonneg'
SHORT_RATIO = 'short_ratio'
CONSTRAINT_KINDS = (DEFINITION, NORMALIZATION, OPT_MOVE, OPT_BOUND, MINIMIZER, TRIANGLE, NONNEG, SHORT_RATIO)

# kinds that only hold after scaling or only for the hypothetical short phase
NOT_CONCRETE = (NORMALIZATION, SHORT_RATIO)

DLM_DELTA = (1.0, 0.75, 0.5)
DLM_BETA = (1.0, 1.25, 0.75)
DLM_BETA_LITERAL = (1.0, 0.25, 0.75)
DLM_BETA_PRIME = (2.0, 1.0)
DLM_PHI = 3.0


def distance_var(x, y):
    return f"d_{x}_{y}"


def split_distance_var(name):
    if not name.startswith('d_'):
        return None
    x, y = name[2:].split('_')
    return x, y


class _Distances:
    """Distance variables over an ordered element list; multiset pairs optional."""

    def __init__(self, model, points, multisets, multiset_pairs):
        self.model = model
        self.points = list(points)
        self.multisets = list(multisets)
        self.elements = self.points + self.multisets
        self.order = {name: i for i, name in enumerate(self.elements)}
        self.multiset_pairs = multiset_pairs
        for x, y in combinations(self.elements, 2):
            if self.defined(x, y):
                model.add_variable(distance_var(x, y))

    def defined(self, x, y):
        if x == y:
            return x in self.points
        return self.multiset_pairs or not (x in self.multisets and y in self.multisets)

    def __call__(self, x, y) -> LinearExpr:
        if x == y and x in self.points:
            return LinearExpr()
        if not self.defined(x, y):
            raise LpModelError(f"[{x}, {y}] is not a variable of this model")
        if self.order[x] > self.order[y]:
            x, y = y, x
        return LinearExpr.var(distance_var(x, y))

    def add_triangles(self):
        for x, y in combinations(self.elements, 2):
            if not self.defined(x, y):
                continue
            for z in self.elements:
                if z in (x, y) or not (self.defined(x, z) and self.defined(z, y)):
                    continue
                self.model.add_constraint(
                    f"{TRIANGLE}__{x}_{y}__{z}", self(x, y), LE, self(x, z) + self(z, y), kind=TRIANGLE,
                )


def build_mtlm_lp(delta, beta, phi) -> LpModel:
    if not 0 < delta <= 2:
        raise LpModelError(f"delta must lie in (0, 2], got {delta}")
    if beta <= 0 or phi <= 0:
        raise LpModelError("beta and phi must be positive")
    model = LpModel('mtlm', params={'delta': delta, 'beta': beta, 'phi': phi})
    points = ['A0', 'A1', 'O0', 'O1']
    d = _Distances(model, points, ['R'], multiset_pairs=False)

    alg = model.add_variable('C_ALG', lower=None)
    opt = model.add_variable('C_OPT')
    req = model.add_variable('C_OPT_req')
    move = model.add_variable('C_OPT_move')

    model.add_constraint(
        f"{DEFINITION}__C_ALG", alg, EQ,
        delta * d('A0', 'R') + d('A0', 'A1') + phi * (d('A1', 'O1') - d('A0', 'O0')),
        kind=DEFINITION,
    )
    model.add_constraint(f"{NORMALIZATION}__C_OPT", opt, EQ, 1.0, kind=NORMALIZATION)
    model.add_constraint(f"{DEFINITION}__C_OPT", opt, EQ, req + move, kind=DEFINITION)
    model.add_constraint(f"{OPT_MOVE}__O", move, GE, d('O0', 'O1'), kind=OPT_MOVE)
    model.add_constraint(
        f"{OPT_BOUND}__O", 2 * req + delta * move, GE, delta * d('O0', 'R') + delta * d('O1', 'R'),
        kind=OPT_BOUND,
    )
    f = lambda x: d('A0', x) + beta * d(x, 'R')
    for v in points:
        model.add_constraint(f"{MINIMIZER}__f__{v}", f('A1'), LE, f(v), kind=MINIMIZER)
    d.add_triangles()
    model.set_objective(alg, 'max')
    return model


def _opt_block(model, d, prefix, marks, parts, deltas, opt_move_delta):
    """Per-part OPT cost variables, their move and lower-bound constraints; returns the total."""
    total = LinearExpr()
    for i, (part, delta_i) in enumerate(zip(parts, deltas), start=1):
        req = model.add_variable(f"{prefix}_req_{i}")
        move = model.add_variable(f"{prefix}_move_{i}")
        total = total + req + move
        before, after = marks[i - 1], marks[i]
        model.add_constraint(f"{OPT_MOVE}__{prefix}_{i}", move, GE, d(before, after), kind=OPT_MOVE)
        move_delta = delta_i if opt_move_delta is None else opt_move_delta
        model.add_constraint(
            f"{OPT_BOUND}__{prefix}_{i}", 2 * req + move_delta * move, GE,
            delta_i * d(before, part) + delta_i * d(after, part), kind=OPT_BOUND,
        )
    return total


def build_dlm_lp(delta=DLM_DELTA, beta=DLM_BETA, beta_prime=DLM_BETA_PRIME, phi=DLM_PHI,
                 include_short=True, include_multiset_pairs=True, opt_move_delta=None) -> LpModel:
    """Long-phase LP, optionally strengthened by the short-phase block."""
    delta, beta, beta_prime = tuple(delta), tuple(beta), tuple(beta_prime)
    if len(delta) != 3 or len(beta) != 3 or len(beta_prime) != 2:
        raise LpModelError("need three deltas, three betas and two short-phase betas")
    if any(not 0 < x <= 2 for x in delta):
        raise LpModelError(f"every delta must lie in (0, 2], got {delta}")
    if any(x < 0 for x in beta + beta_prime) or phi < 0:
        raise LpModelError("weights must be nonnegative")

    name = 'dlm' if include_short else 'dlm-no-short'
    model = LpModel(name, params={
        'delta': list(delta), 'beta': list(beta), 'beta_prime': list(beta_prime), 'phi': phi,
        'include_short': include_short, 'multiset_pairs': include_multiset_pairs,
        'opt_move_delta': opt_move_delta,
    })
    long_marks = ['OL0', 'OL1', 'OL2', 'OL3']
    short_marks = ['OS0', 'OS1', 'OS2']
    domain = ['A0', 'A3'] + long_marks + (short_marks if include_short else [])
    points = domain + (['A2'] if include_short else [])
    parts = ['R1', 'R2', 'R3']
    d = _Distances(model, points, parts, include_multiset_pairs)

    alg = model.add_variable('C_ALGL', lower=None)
    opt = model.add_variable('C_OPTL')
    model.add_constraint(
        f"{DEFINITION}__C_ALGL", alg, EQ,
        d('A0', 'A3') + sum((dl * d('A0', r) for dl, r in zip(delta, parts)), LinearExpr())
        + phi * (d('A3', 'OL3') - d('A0', 'OL0')),
        kind=DEFINITION,
    )
    model.add_constraint(f"{NORMALIZATION}__C_OPTL", opt, EQ, 1.0, kind=NORMALIZATION)
    opt_total = _opt_block(model, d, 'C_OPTL', long_marks, parts, delta, opt_move_delta)
    model.add_constraint(f"{DEFINITION}__C_OPTL", opt, EQ, opt_total, kind=DEFINITION)

    h = lambda x: d('A0', x) + sum((b * d(x, r) for b, r in zip(beta, parts)), LinearExpr())
    for v in domain:
        model.add_constraint(f"{MINIMIZER}__h__{v}", h('A3'), LE, h(v), kind=MINIMIZER)

    if include_short:
        alg_s = model.add_variable('C_ALGS', lower=None)
        opt_s = model.add_variable('C_OPTS')
        model.add_constraint(
            f"{DEFINITION}__C_ALGS", alg_s, EQ,
            d('A0', 'A2') + delta[0] * d('A0', 'R1') + delta[1] * d('A0', 'R2')
            + phi * (d('A2', 'OS2') - d('A0', 'OS0')),
            kind=DEFINITION,
        )
        short_total = _opt_block(model, d, 'C_OPTS', short_marks, parts[:2], delta[:2], opt_move_delta)
        model.add_constraint(f"{DEFINITION}__C_OPTS", opt_s, EQ, short_total, kind=DEFINITION)
        g = lambda x: d('A0', x) + beta_prime[0] * d(x, 'R1') + beta_prime[1] * d(x, 'R2')
        for v in domain:
            model.add_constraint(f"{MINIMIZER}__g__{v}", g('A2'), LE, g(v), kind=MINIMIZER)
        model.add_constraint(f"{SHORT_RATIO}__S", alg_s, GE, 4 * opt_s, kind=SHORT_RATIO)

    d.add_triangles()
    model.set_objective(alg, 'max')
    logger.debug("built %s LP: %d variables, %d constraints", name, len(model.variables), len(model.constraints))
    return model


def build_model(name, **params) -> LpModel:
    """mtlm, dlm or dlm-no-short, with the published parameters as defaults."""
    if name == 'mtlm':
        c0 = migration_constants().c0
        return build_mtlm_lp(params.get('delta', c0), params.get('beta', 1 + c0), params.get('phi', 1 + c0))
    if name in ('dlm', 'dlm-no-short'):
        params.setdefault('include_short', name == 'dlm')
        return build_dlm_lp(**params)
    raise LpModelError(f"unknown LP model {name!r}")


@dataclass(frozen=True)
class Witness:
    objective: float
    elements: tuple
    distances: dict
    costs: dict
    tight: tuple
    triangle_violation: float
    model: str = ''

    def table(self):
        """Square distance table over the elements; undefined pairs are None."""
        rows = []
        for x in self.elements:
            row = []
            for y in self.elements:
                if x == y:
                    row.append(0.0 if not x.startswith('R') else None)
                else:
                    row.append(self.distances.get((x, y), self.distances.get((y, x))))
            rows.append(row)
        return rows


def extract_witness(solution: LpSolution, model: LpModel, tol=1e-7) -> Witness:
    if not solution.optimal:
        raise SolverError(f"cannot extract a witness from a {solution.status} solution")
    distances = {}
    elements = []
    costs = {}
    for name, value in solution.assignment.items():
        pair = split_distance_var(name)
        if pair is None:
            costs[name] = value
            continue
        distances[pair] = value
        for element in pair:
            if element not in elements:
                elements.append(element)
    tight = tuple(
        c.name for c in model.constraints
        if c.kind not in (DEFINITION, NORMALIZATION) and abs(c.slack(solution.assignment)) <= tol
    )
    triangle = max(
        (c.violation(solution.assignment) for c in model.constraints_of_kind(TRIANGLE)), default=0.0
    )
    return Witness(
        objective=solution.objective_value,
        elements=tuple(elements),
        distances=distances,
        costs=costs,
        tight=tight,
        triangle_violation=triangle,
        model=model.name,
    )


def to_scipy(model: LpModel):
    """linprog arguments (minimisation form) and the variable order."""
    names, c, A, senses, b, free = model.matrices()
    le = [i for i, s in enumerate(senses) if s == LE]
    ge = [i for i, s in enumerate(senses) if s == GE]
    eq = [i for i, s in enumerate(senses) if s == EQ]
    A_ub = np.vstack([A[le], -A[ge]]) if le or ge else None
    b_ub = np.concatenate([b[le], -b[ge]]) if le or ge else None
    arguments = {
        'c': -c,
        'A_ub': A_ub,
        'b_ub': b_ub,
        'A_eq': A[eq] if eq else None,
        'b_eq': b[eq] if eq else None,
        'bounds': [(None, None) if is_free else (0, None) for is_free in free],
    }
    return arguments, names


def reference_solve(model: LpModel) -> LpSolution:
    """Solve with scipy's HiGHS backend; used to cross-check solve_lp."""
    arguments, names = to_scipy(model)
    result = linprog(method='highs', **arguments)
    if result.status == 2:
        return LpSolution(INFEASIBLE, message=result.message)
    if result.status == 3:
        return LpSolution(UNBOUNDED, message=result.message)
    if result.status != 0:
        return LpSolution(SOLVER_FAILURE, message=result.message)
    assignment = {name: float(v) for name, v in zip(names, result.x)}
    return LpSolution(
        OPTIMAL,
        float(model.objective.evaluate(assignment)),
        assignment,
        int(getattr(result, 'nit', 0)),
        model.max_violation(assignment),
        result.message,
        duals=_duals(model, result),
    )


def _duals(model: LpModel, result):
    """Raw HiGHS marginals mapped back to constraint names, as d(model objective)/d(rhs)."""
    senses = [constraint.sense for constraint in model.constraints]
    le = [i for i, s in enumerate(senses) if s == LE]
    ge = [i for i, s in enumerate(senses) if s == GE]
    eq = [i for i, s in enumerate(senses) if s == EQ]
    # linprog minimises -objective for max models
    orient = -1.0 if model.sense == 'max' else 1.0
    duals = {}
    upper = np.asarray(result.ineqlin.marginals) if le or ge else np.zeros(0)
    for position, i in enumerate(le):
        duals[model.constraints[i].name] = orient * float(upper[position])
    for position, i in enumerate(ge, start=len(le)):
        # the row entered linprog negated
        duals[model.constraints[i].name] = -orient * float(upper[position])
    if eq:
        for position, i in enumerate(eq):
            duals[model.constraints[i].name] = orient * float(result.eqlin.marginals[position])
    return duals


def concrete_assignment(model: LpModel, space, elements: dict, costs: dict) -> dict:
    """Every model variable evaluated on a concrete phase.

    `elements` maps element names to point ids or RequestMultisets; cost
    variables are taken from `costs`.
    """
    assignment = {}
    for name in model.variables:
        pair = split_distance_var(name)
        if pair is None:
            try:
                assignment[name] = float(costs[name])
            except KeyError:
                raise LpModelError(f"no concrete value for cost variable {name!r}") from None
            continue
        x, y = (elements[p] for p in pair)
        assignment[name] = bracket_pair(space, x, y, allow_multiset_pairs=True)
    return assignment


def concrete_violations(model: LpModel, assignment, skip=NOT_CONCRETE):
    return [(c, amount) for c, amount in model.evaluate(assignment) if c.kind not in skip]


def mtlm_phase_assignment(model, space, start, target, opt_segment, requests):
    """Instantiate the MTLM LP: ALG moves start -> target, OPT follows opt_segment."""
    R = RequestMultiset.from_requests(requests)
    elements = {'A0': start, 'A1': target, 'O0': opt_segment[0], 'O1': opt_segment[-1], 'R': R}
    serve, move = segment_costs(space, opt_segment, requests)
    p = model.params
    alg = (
        p['delta'] * bracket_pair(space, start, R) + bracket_pair(space, start, target)
        + p['phi'] * (bracket_pair(space, target, opt_segment[-1]) - bracket_pair(space, start, opt_segment[0]))
    )
    costs = {'C_ALG': alg, 'C_OPT': serve + move, 'C_OPT_req': serve, 'C_OPT_move': move}
    return concrete_assignment(model, space, elements, costs)


def dlm_phase_assignment(model, space, start, long_target, short_target, parts, opt_segments):
    """Instantiate the DLM LP on three request parts with OPT segments per part.

    The short block reuses the first two OPT segments.
    """
    p = model.params
    multisets = [RequestMultiset.from_requests(part) for part in parts]
    marks = [opt_segments[0][0]] + [seg[-1] for seg in opt_segments]
    elements = {'A0': start, 'A3': long_target, 'R1': multisets[0], 'R2': multisets[1], 'R3': multisets[2]}
    elements.update({f"OL{i}": m for i, m in enumerate(marks)})

    costs = {}
    total = 0.0
    for i, (seg, part) in enumerate(zip(opt_segments, parts), start=1):
        serve, move = segment_costs(space, seg, part)
        costs[f"C_OPTL_req_{i}"] = serve
        costs[f"C_OPTL_move_{i}"] = move
        total += serve + move
    costs['C_OPTL'] = total
    costs['C_ALGL'] = (
        bracket_pair(space, start, long_target)
        + sum(dl * bracket_pair(space, start, R) for dl, R in zip(p['delta'], multisets))
        + p['phi'] * (bracket_pair(space, long_target, marks[3]) - bracket_pair(space, start, marks[0]))
    )
    if p['include_short']:
        elements['A2'] = short_target
        elements.update({f"OS{i}": m for i, m in enumerate(marks[:3])})
        short_total = 0.0
        for i in (1, 2):
            costs[f"C_OPTS_req_{i}"] = costs[f"C_OPTL_req_{i}"]
            costs[f"C_OPTS_move_{i}"] = costs[f"C_OPTL_move_{i}"]
            short_total += costs[f"C_OPTS_req_{i}"] + costs[f"C_OPTS_move_{i}"]
        costs['C_OPTS'] = short_total
        costs['C_ALGS'] = (
            bracket_pair(space, start, short_target)
            + p['delta'][0] * bracket_pair(space, start, multisets[0])
            + p['delta'][1] * bracket_pair(space, start, multisets[1])
            + p['phi'] * (bracket_pair(space, short_target, marks[2]) - bracket_pair(space, start, marks[0]))
        )
    return concrete_assignment(model, space, elements, costs)


def phi_sensitivity(builder, params: dict, deltas, solver=solve_lp):
    """(phi, objective) for phi shifted by each delta; objective None when not optimal."""
    rows = []
    for step in deltas:
        shifted = dict(params, phi=params['phi'] + step)
        solution = solver(builder(**shifted))
        rows.append((shifted['phi'], solution.objective_value if solution.optimal else None))
    return rows
