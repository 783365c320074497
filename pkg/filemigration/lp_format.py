"""
CPLEX-style LP text for LpModel.

    \\* mtlm *\\
    \\* params: {"beta": 2.84, ...} *\\
    Maximize
     obj: + 1.0 C_ALG
    Subject To
     triangle__A0_A1__R: + 1.0 d_A0_A1 - 1.0 d_A0_R - 1.0 d_A1_R <= 0.0
    Bounds
     d_A0_A1 >= 0
     C_ALG free
    End

Constraint names carry their kind as the prefix before a double underscore.
Every variable is listed under Bounds, in declaration order, so parsing and
re-exporting gives the same text.
"""
import json
import re

from .exceptions import LpFormatError
from .simplex import EQ, GE, LE, LinearExpr, LpModel

NAME = r'[A-Za-z_][A-Za-z0-9_.]*'
NUMBER = r'(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|inf'
TERM_RE = re.compile(rf'([+-])\s*({NUMBER})?\s*({NAME})')
LABEL_RE = re.compile(rf'^\s*({NAME})\s*:\s*(.*)$')
RELATION_RE = re.compile(r'(<=|>=|=<|=>|<|>|=)')
COMMENT_RE = re.compile(r'^\\\*\s*(.*?)\s*\*\\$')

SECTIONS = {
    'maximize': 'objective', 'maximise': 'objective', 'max': 'objective',
    'minimize': 'objective', 'minimise': 'objective', 'min': 'objective',
    'subject to': 'constraints', 'such that': 'constraints', 's.t.': 'constraints', 'st': 'constraints',
    'bounds': 'bounds',
    'end': 'end',
}
KIND_SEPARATOR = '__'


def _number(value):
    return repr(float(value))


def _expression(expr: LinearExpr):
    if not expr.terms:
        return '0'
    parts = []
    for name, coef in expr.terms:
        sign = '-' if coef < 0 else '+'
        parts.append(f"{sign} {_number(abs(coef))} {name}")
    return ' '.join(parts)


def constraint_label(kind, name):
    return f"{kind}{KIND_SEPARATOR}{name}"


def export_lp(model: LpModel) -> str:
    lines = [f"\\* {model.name} *\\"]
    if model.params:
        lines.append(f"\\* params: {json.dumps(model.params, sort_keys=True)} *\\")
    lines.append('Maximize' if model.sense == 'max' else 'Minimize')
    lines.append(f" obj: {_expression(model.objective)}")
    lines.append('Subject To')
    for constraint in model.constraints:
        label = constraint.name
        if not label.startswith(constraint.kind + KIND_SEPARATOR):
            label = constraint_label(constraint.kind, label)
        lines.append(f" {label}: {_expression(constraint.expr)} {constraint.sense} {_number(constraint.rhs)}")
    lines.append('Bounds')
    for name, lower in model.variables.items():
        lines.append(f" {name} free" if lower is None else f" {name} >= 0")
    lines.append('End')
    return '\n'.join(lines) + '\n'


def _parse_terms(text, lineno):
    text = text.strip()
    if text in ('', '0'):
        return {}
    if text[0] not in '+-':
        text = '+ ' + text
    coefficients = {}
    position = 0
    for match in TERM_RE.finditer(text):
        if text[position:match.start()].strip():
            raise LpFormatError(f"line {lineno}: cannot parse {text[position:match.start()]!r}")
        sign, coef, name = match.groups()
        value = float(coef) if coef else 1.0
        coefficients[name] = coefficients.get(name, 0.0) + (-value if sign == '-' else value)
        position = match.end()
    if text[position:].strip():
        raise LpFormatError(f"line {lineno}: trailing text {text[position:]!r}")
    return coefficients


def _normalise_relation(op):
    return {'<': LE, '=<': LE, '<=': LE, '>': GE, '=>': GE, '>=': GE, '=': EQ}[op]


def parse_lp(text: str) -> LpModel:
    """Inverse of export_lp; accepts the common subset of CPLEX LP syntax."""
    name = 'model'
    params = {}
    sense = None
    objective = None
    constraints = []
    bounds = []
    section = None
    pending = None

    def flush():
        nonlocal pending, objective
        if pending is None:
            return
        lineno, label, body = pending
        pending = None
        if section == 'objective':
            objective = (lineno, body)
            return
        parts = RELATION_RE.split(body)
        if len(parts) != 3:
            raise LpFormatError(f"line {lineno}: constraint {label!r} needs exactly one relation")
        lhs, op, rhs = parts
        try:
            rhs_value = float(rhs)
        except ValueError:
            raise LpFormatError(f"line {lineno}: right-hand side {rhs.strip()!r} is not a number") from None
        constraints.append((lineno, label, lhs, _normalise_relation(op), rhs_value))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        comment = COMMENT_RE.match(line)
        if comment:
            body = comment.group(1)
            if body.startswith('params:'):
                try:
                    params = json.loads(body[len('params:'):])
                except json.JSONDecodeError as exc:
                    raise LpFormatError(f"line {lineno}: bad params comment: {exc}") from exc
            elif sense is None and objective is None:
                name = body
            continue
        keyword = line.lower()
        if keyword in SECTIONS:
            flush()
            section = SECTIONS[keyword]
            if section == 'objective':
                sense = 'max' if keyword.startswith('max') else 'min'
            if section == 'end':
                break
            continue
        if section is None:
            raise LpFormatError(f"line {lineno}: content before the objective section")
        if section == 'bounds':
            bounds.append((lineno, line))
            continue
        label = LABEL_RE.match(line)
        if label:
            flush()
            pending = (lineno, label.group(1), label.group(2))
        elif section == 'objective' and pending is None:
            pending = (lineno, 'obj', line)
        elif pending is not None:
            pending = (pending[0], pending[1], pending[2] + ' ' + line)
        else:
            raise LpFormatError(f"line {lineno}: expected 'name: expression'")
    else:
        if section != 'end':
            flush()
    if sense is None:
        raise LpFormatError("missing objective section")

    model = LpModel(name=name, params=params)
    for lineno, line in bounds:
        tokens = line.split()
        if len(tokens) == 2 and tokens[1].lower() == 'free':
            model.add_variable(tokens[0], lower=None)
        elif len(tokens) == 3 and tokens[1] == '>=' and tokens[2] in ('0', '0.0'):
            model.add_variable(tokens[0], lower=0.0)
        else:
            raise LpFormatError(f"line {lineno}: unsupported bound {line!r}")

    for lineno, label, lhs, op, rhs in constraints:
        coefficients = _parse_terms(lhs, lineno)
        for var in coefficients:
            if var not in model.variables:
                model.add_variable(var, lower=0.0)
        kind = label.split(KIND_SEPARATOR, 1)[0] if KIND_SEPARATOR in label else 'general'
        model.add_constraint(label, LinearExpr.of(coefficients), op, rhs, kind=kind)

    lineno, body = objective if objective is not None else (0, '0')
    coefficients = _parse_terms(body, lineno)
    for var in coefficients:
        if var not in model.variables:
            model.add_variable(var, lower=0.0)
    model.set_objective(LinearExpr.of(coefficients), sense)
    return model
