"""
Linear-program model and a dense two-phase tableau simplex.

Models are small (at most a few hundred columns, a couple of thousand rows),
so the tableau is a plain numpy array. Pricing follows Bland's rule from the
first pivot: lowest-index entering column, lowest-index leaving basic variable
among ratio ties. This never cycles.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conf import lp_tolerance
from .exceptions import LpModelError

logger = logging.getLogger(__name__)

LE, GE, EQ = '<=', '>=', '='
SENSES = (LE, GE, EQ)

OPTIMAL = 'optimal'
UNBOUNDED = 'unbounded'
INFEASIBLE = 'infeasible'
SOLVER_FAILURE = 'solver_failure'

PIVOT_EPS = 1e-9


@dataclass(frozen=True)
class LinearExpr:
    """Sparse linear form: sorted (variable, coefficient) pairs plus a constant."""

    terms: tuple = ()
    constant: float = 0.0

    @classmethod
    def of(cls, coefficients=None, constant=0.0):
        merged = {}
        for name, coef in (coefficients or {}).items():
            merged[name] = merged.get(name, 0.0) + float(coef)
        return cls(tuple(sorted((k, v) for k, v in merged.items() if v != 0.0)), float(constant))

    @classmethod
    def var(cls, name, coef=1.0):
        return cls.of({name: coef})

    def as_dict(self):
        return dict(self.terms)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return LinearExpr(self.terms, self.constant + other)
        merged = self.as_dict()
        for name, coef in other.terms:
            merged[name] = merged.get(name, 0.0) + coef
        return LinearExpr.of(merged, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self):
        return LinearExpr(tuple((k, -v) for k, v in self.terms), -self.constant)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        return LinearExpr.of({k: v * scalar for k, v in self.terms}, self.constant * scalar)

    __rmul__ = __mul__

    @property
    def variables(self):
        return tuple(k for k, _ in self.terms)

    def evaluate(self, assignment):
        return self.constant + sum(coef * assignment[name] for name, coef in self.terms)


@dataclass(frozen=True)
class Constraint:
    name: str
    expr: LinearExpr
    sense: str
    rhs: float
    kind: str = 'general'

    def violation(self, assignment):
        value = self.expr.evaluate(assignment)
        if self.sense == LE:
            return max(0.0, value - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - value)
        return abs(value - self.rhs)

    def slack(self, assignment):
        """Distance from the boundary; negative means violated (equalities: minus the gap)."""
        value = self.expr.evaluate(assignment)
        if self.sense == LE:
            return self.rhs - value
        if self.sense == GE:
            return value - self.rhs
        return -abs(value - self.rhs)


@dataclass
class LpModel:
    name: str
    sense: str = 'max'
    objective: LinearExpr = field(default_factory=LinearExpr)
    variables: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def add_variable(self, name, lower: Optional[float] = 0.0):
        if name in self.variables:
            raise LpModelError(f"variable {name!r} declared twice")
        if lower not in (0.0, None):
            raise LpModelError(f"variable {name!r}: only x >= 0 and free variables are supported")
        self.variables[name] = lower
        return LinearExpr.var(name)

    def add_constraint(self, name, lhs: LinearExpr, sense, rhs=0.0, kind='general'):
        """Adds lhs (sense) rhs; rhs may itself be a LinearExpr."""
        if sense not in SENSES:
            raise LpModelError(f"unknown constraint sense {sense!r}")
        if isinstance(rhs, LinearExpr):
            lhs = lhs - rhs
            rhs = 0.0
        for var in lhs.variables:
            if var not in self.variables:
                raise LpModelError(f"constraint {name!r} uses undeclared variable {var!r}")
        constraint = Constraint(name, LinearExpr(lhs.terms), sense, float(rhs) - lhs.constant, kind)
        self.constraints.append(constraint)
        return constraint

    def set_objective(self, expr: LinearExpr, sense='max'):
        if sense not in ('max', 'min'):
            raise LpModelError(f"unknown objective sense {sense!r}")
        for var in expr.variables:
            if var not in self.variables:
                raise LpModelError(f"objective uses undeclared variable {var!r}")
        self.objective = expr
        self.sense = sense

    def constraints_of_kind(self, kind):
        return [c for c in self.constraints if c.kind == kind]

    def evaluate(self, assignment):
        """(constraint, violation) for every constraint violated by more than zero."""
        missing = [name for name in self.variables if name not in assignment]
        if missing:
            raise LpModelError(f"assignment misses {len(missing)} variables, e.g. {missing[0]!r}")
        violations = []
        for constraint in self.constraints:
            amount = constraint.violation(assignment)
            if amount > 0.0:
                violations.append((constraint, amount))
        for name, lower in self.variables.items():
            if lower is not None and assignment[name] < lower:
                violations.append((Constraint(f"bound_{name}", LinearExpr.var(name), GE, 0.0, 'nonneg'),
                                   lower - assignment[name]))
        return violations

    def max_violation(self, assignment):
        return max((amount for _, amount in self.evaluate(assignment)), default=0.0)

    def matrices(self):
        """Dense (names, c, A, senses, b, free) with c oriented for maximisation."""
        names = list(self.variables)
        index = {name: i for i, name in enumerate(names)}
        A = np.zeros((len(self.constraints), len(names)))
        b = np.zeros(len(self.constraints))
        for row, constraint in enumerate(self.constraints):
            for var, coef in constraint.expr.terms:
                A[row, index[var]] = coef
            b[row] = constraint.rhs
        c = np.zeros(len(names))
        for var, coef in self.objective.terms:
            c[index[var]] = coef
        if self.sense == 'min':
            c = -c
        senses = [constraint.sense for constraint in self.constraints]
        free = np.array([self.variables[name] is None for name in names], dtype=bool)
        return names, c, A, senses, b, free


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective_value: Optional[float] = None
    assignment: dict = field(default_factory=dict)
    iterations: int = 0
    max_violation: float = 0.0
    message: str = ''
    # constraint name -> d(objective)/d(rhs); filled by the reference solver
    duals: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status == OPTIMAL


class _Tableau:
    """Row 0..m-1 constraints, last row reduced costs for minimisation; last column rhs."""

    def __init__(self, table, basis):
        self.T = table
        self.basis = basis
        self.iterations = 0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed, max_iterations):
        while self.iterations < max_iterations:
            T = self.T
            candidates = np.flatnonzero((T[-1, :-1] < -PIVOT_EPS) & allowed)
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])

            column = T[:-1, col]
            rows = np.flatnonzero(column > PIVOT_EPS)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + PIVOT_EPS * max(1.0, abs(best))]
            row = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(row, col)
        return SOLVER_FAILURE


def _standard_form(model: LpModel):
    names, c, A, senses, b, free = model.matrices()
    # free variables are split into x+ - x-
    A = np.hstack([A, -A[:, free]])
    c = np.concatenate([c, -c[free]])
    A = A.copy()
    b = b.copy()
    senses = list(senses)
    for i in range(len(b)):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]
    return names, free, c, A, senses, b


def solve_lp(model: LpModel, tol=None, max_iterations=None) -> LpSolution:
    """Two-phase simplex; the returned optimum is re-checked against the model."""
    tol = lp_tolerance() if tol is None else tol
    names, free, c, A, senses, b = _standard_form(model)
    m, n = A.shape
    n_slack = sum(1 for s in senses if s != EQ)
    n_art = sum(1 for s in senses if s != LE)
    width = n + n_slack + n_art
    max_iterations = max_iterations or 50 * (m + width)

    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [0] * m
    slack_col, art_col = n, n + n_slack
    artificial = np.zeros(width, dtype=bool)
    for i, sense in enumerate(senses):
        if sense == LE:
            T[i, slack_col] = 1.0
            basis[i] = slack_col
            slack_col += 1
        else:
            if sense == GE:
                T[i, slack_col] = -1.0
                slack_col += 1
            T[i, art_col] = 1.0
            artificial[art_col] = True
            basis[i] = art_col
            art_col += 1

    tableau = _Tableau(T, basis)
    everything = np.ones(width, dtype=bool)
    if n_art:
        art_rows = [i for i, col in enumerate(basis) if artificial[col]]
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, :-1][artificial] = 0.0
        status = tableau.run(everything, max_iterations)
        if status != OPTIMAL:
            return _failure(f"phase one stopped with {status}", tableau.iterations)
        infeasibility = -T[-1, -1]
        logger.debug("simplex phase one: %d pivots, infeasibility %.3g", tableau.iterations, infeasibility)
        if infeasibility > tol * max(1.0, float(np.abs(b).max(initial=0.0))):
            return LpSolution(INFEASIBLE, iterations=tableau.iterations,
                              message=f"phase one residual {infeasibility:.3g}")
        _drive_out_artificials(tableau, artificial)

    # phase two minimises -c
    T = tableau.T
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for row, col in enumerate(tableau.basis):
        if T[-1, col] != 0.0:
            T[-1, :] -= T[-1, col] * T[row]
    status = tableau.run(~artificial, max_iterations)
    logger.debug("simplex phase two: %s after %d pivots", status, tableau.iterations)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tableau.iterations)
    if status != OPTIMAL:
        return _failure("iteration limit reached", tableau.iterations)

    x = np.zeros(width)
    for row, col in enumerate(tableau.basis):
        x[col] = tableau.T[row, -1]
    values = x[:len(names)].copy()
    values[free] -= x[len(names):n]
    assignment = {name: float(v) for name, v in zip(names, values)}
    violation = model.max_violation(assignment)
    if violation > tol:
        logger.warning("simplex result violates the model by %.3g; reporting solver failure", violation)
        return _failure(f"re-check violation {violation:.3g}", tableau.iterations, violation)
    objective = model.objective.evaluate(assignment)
    return LpSolution(OPTIMAL, float(objective), assignment, tableau.iterations, violation)


def _drive_out_artificials(tableau, artificial):
    """Pivot basic artificials (at zero level) out, or drop their redundant rows."""
    T = tableau.T
    keep = []
    for row in range(len(tableau.basis)):
        col = tableau.basis[row]
        if not artificial[col]:
            keep.append(row)
            continue
        options = np.flatnonzero((np.abs(T[row, :-1]) > PIVOT_EPS) & ~artificial)
        if options.size:
            tableau.pivot(row, int(options[0]))
            keep.append(row)
    if len(keep) < len(tableau.basis):
        tableau.T = np.vstack([T[keep], T[-1:]])
        tableau.basis = [tableau.basis[r] for r in keep]


def _failure(message, iterations, violation=0.0):
    logger.warning("simplex failure: %s", message)
    return LpSolution(SOLVER_FAILURE, iterations=iterations, max_violation=violation, message=message)
