"""
Runners behind the management commands and the API views.

Each runner takes validated config data, returns an ExperimentOutcome with a
JSON-ready result and the exit code of the command, and optionally writes the
report files.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .algorithms import (
    FixedPhasePolicy, fixed_phase_adapter, make_policy, mtm_move, mtlm_move, run_online, stay_move,
    write_run_csv,
)
from .analysis import competitive_report, ledger_rows, phase_partition, write_ledger_csv
from .conf import max_workers, tolerance, tolerance_override
from .constants import migration_constants
from .exceptions import InstanceError
from .factor_lp import build_model, extract_witness, reference_solve
from .instances import (
    EUCLIDEAN, all_at_start_instance, bipartite_instance, linear_instance, random_instance,
)
from .lowerbound import RandomMoveRule, run_epochs, verify_state_graph, write_epoch_csv
from .lp_format import export_lp
from .models import ExperimentReport
from .offline import opt_dp
from .reports import build_report, report_dir, write_report
from .serializers import (
    CompetitiveReportSerializer, ConstantsRowSerializer, EpochSummarySerializer, LpSolutionSerializer,
    PlayOutcomeSerializer, RunSummarySerializer, StateGraphSerializer, WitnessSerializer, dump_instance,
)
from .simplex import solve_lp

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_NEGATIVE_SLACK = 2
EXIT_NON_COMPETITIVE = 3
EXIT_SOLVER_FAILURE = 4


@dataclass
class ExperimentOutcome:
    command: str
    config: dict
    result: dict
    summary: dict
    exit_code: int = EXIT_OK
    files: list = field(default_factory=list)

    @property
    def passed(self):
        return self.exit_code == EXIT_OK

    def report(self):
        return build_report(self.command, self.config, self.result)


def make_instance(gen, params, seed=None):
    """Instance from a generator name and its key=value parameters."""
    params = dict(params)
    if seed is not None:
        params['seed'] = seed
    try:
        if gen == 'linear':
            instance = linear_instance(float(params.pop('c', migration_constants().c0)), int(params.pop('D')))
        elif gen == 'bipartite':
            instance = bipartite_instance(
                int(params.pop('k')), float(params.pop('f', 1.0)),
                float(params.pop('c', migration_constants().c0)), int(params.pop('D')),
            )
        elif gen == 'random':
            instance = random_instance(
                int(params.pop('n')), int(params.pop('D')), int(params.pop('T')),
                int(params.pop('seed', 0)), params.pop('kind', EUCLIDEAN),
            )
        elif gen == 'all-at-start':
            base = random_instance(int(params.pop('n')), int(params.pop('D')), 1, int(params.pop('seed', 0)))
            instance = all_at_start_instance(base.space, base.start, int(params.pop('T')))
        else:
            raise InstanceError(f"unknown generator {gen!r}")
    except KeyError as exc:
        raise InstanceError(f"the {gen} generator needs the parameter {exc.args[0]}") from None
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"bad {gen} generator parameter: {exc}") from None
    if params:
        raise InstanceError(f"unknown {gen} generator parameters: {sorted(params)}")
    return instance


def _simulate_one(alg, instance, free_start, tol):
    with tolerance_override(tol):
        run = run_online(make_policy(alg), instance)
        opt = opt_dp(instance, free_start=free_start)
    return run, opt


def _instances(data):
    if 'instance' in data:
        return [data['instance']['instance']]
    seed = data.get('seed')
    if data['runs'] == 1:
        return [make_instance(data['gen'], data['params'], seed)]
    first = 0 if seed is None else seed
    return [make_instance(data['gen'], data['params'], first + i) for i in range(data['runs'])]


def simulate(data, canonical, out=None, workers=None) -> ExperimentOutcome:
    instances = _instances(data)
    tol = data.get('tol')
    workers = workers or max_workers()
    jobs = [(data['alg'], instance, data['free_start'], tol) for instance in instances]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        pairs = [_simulate_one(*job) for job in jobs]

    with tolerance_override(tol):
        report = competitive_report(pairs)
        ledgers = [phase_partition(run, opt) for run, opt in pairs] if data['alg'] == 'dlm' else []
        rows = [ledger_rows(run_ledgers) for run_ledgers in ledgers]

    runs = []
    for run, opt in pairs:
        summary = dict(RunSummarySerializer(run).data)
        summary['opt_cost'] = opt.cost
        runs.append(summary)
    report_data = dict(CompetitiveReportSerializer(report).data)
    result = {'runs': runs, 'report': report_data, 'ledger': rows}
    outcome = ExperimentOutcome(
        command='simulate', config=canonical, result=result,
        summary={'ratio': report_data['ratio'], 'total_alg': report.total_alg, 'total_opt': report.total_opt,
                 'negative_phases': len(report.negative_phases)},
        exit_code=EXIT_OK if report.passed else EXIT_NEGATIVE_SLACK,
    )
    if out is not None:
        directory = report_dir(out)
        outcome.files.append(write_report(outcome.command, canonical, result, directory))
        for i, ((run, _), instance) in enumerate(zip(pairs, instances)):
            outcome.files.append(dump_instance(instance, directory / f"instance-{i}.json"))
            outcome.files.append(write_run_csv(run, instance, directory / f"run-{i}.csv"))
        for i, run_ledgers in enumerate(ledgers):
            outcome.files.append(write_ledger_csv(run_ledgers, directory / f"ledger-{i}.csv"))
    return outcome


def solve_lp_config(data, params, canonical, out=None) -> ExperimentOutcome:
    model = build_model(data['model'], **params)
    with tolerance_override(data.get('tol')):
        solution = reference_solve(model) if data['solver'] == 'highs' else solve_lp(model)
    result = {'model': model.name, 'solution': dict(LpSolutionSerializer(solution).data)}
    if solution.optimal:
        result['witness'] = dict(WitnessSerializer(extract_witness(solution, model)).data)
        # the tableau solver keeps no duals; take HiGHS's raw marginals
        duals = solution.duals or reference_solve(model).duals
        result['duals'] = {name: duals[name] for name in sorted(duals)}
    else:
        logger.warning("%s LP did not solve: %s (%s)", model.name, solution.status, solution.message)
    outcome = ExperimentOutcome(
        command='lp', config=canonical, result=result,
        summary={'model': model.name, 'status': solution.status, 'objective': solution.objective_value},
        exit_code=EXIT_OK if solution.optimal else EXIT_SOLVER_FAILURE,
    )
    if out is not None:
        directory = report_dir(out)
        lp_path = Path(directory / f"{model.name}.lp")
        lp_path.write_text(export_lp(model))
        outcome.files.append(lp_path)
        outcome.files.append(write_report(outcome.command, canonical, result, directory, name=model.name))
    return outcome


def lowerbound_policy(name, c, seed=0) -> FixedPhasePolicy:
    if name == 'mtlm':
        return fixed_phase_adapter(mtlm_move, c, name='mtlm')
    if name == 'mtm':
        return fixed_phase_adapter(mtm_move, c, name='mtm')
    if name == 'stay':
        return fixed_phase_adapter(stay_move, c, name='stay')
    if name == 'random':
        return fixed_phase_adapter(RandomMoveRule(seed), c, name='random')
    raise InstanceError(f"unknown lower-bound policy {name!r}")


def bound_violations(ledger, tol=None):
    """Plays whose gain falls below their closed-form bound by more than tol*D."""
    tol = tolerance() if tol is None else tol
    return [
        (epoch, outcome) for epoch, outcome in ledger.plays
        if not outcome.flags and outcome.gain < outcome.bound - tol * ledger.D
    ]


def lowerbound(data, canonical, out=None) -> ExperimentOutcome:
    """Raises NonCompetitivePolicyError when a finishing play never ends."""
    result = {}
    with tolerance_override(data.get('tol')):
        if data['verify_state_graph']:
            result['state_graph'] = dict(StateGraphSerializer(verify_state_graph(data['L'], data['k'], data['c'])).data)
        policy = lowerbound_policy(data['policy'], data['c'], data['seed'])
        ledger = run_epochs(
            policy, data['L'], data['k'], data['c'], data['D'], data['epochs'], data['seed'],
            max_loops=data['max_loops'], max_phases=data['max_phases'],
        )
        violations = bound_violations(ledger)
    for epoch, outcome in violations:
        logger.warning("epoch %d %s play: gain %.6g below bound %.6g", epoch, outcome.kind, outcome.gain, outcome.bound)

    report_data = dict(CompetitiveReportSerializer(ledger.report()).data)
    result.update({
        'eps': ledger.eps,
        'threshold': ledger.threshold,
        'ratio': report_data['ratio'],
        'total_alg': ledger.total_alg,
        'total_opt': ledger.total_opt,
        'transition_cost': ledger.transition_cost,
        'epochs': EpochSummarySerializer(ledger.epochs, many=True).data,
        'plays': [dict(PlayOutcomeSerializer(o).data, epoch=e) for e, o in ledger.plays],
        'bound_violations': len(violations),
    })
    state_graph_ok = result.get('state_graph', {}).get('min_gain', 0.0) >= -tolerance()
    outcome = ExperimentOutcome(
        command='lowerbound', config=canonical, result=result,
        summary={'ratio': result['ratio'], 'eps': ledger.eps, 'threshold': ledger.threshold,
                 'transition_cost': ledger.transition_cost, 'bound_violations': len(violations)},
        exit_code=EXIT_OK if not violations and state_graph_ok else EXIT_NEGATIVE_SLACK,
    )
    if out is not None:
        directory = report_dir(out)
        outcome.files.append(write_report(outcome.command, canonical, result, directory))
        outcome.files.append(write_epoch_csv(ledger, directory / 'epochs.csv'))
    return outcome


def constants_table(out=None) -> ExperimentOutcome:
    rows = [
        dict(ConstantsRowSerializer({'name': name, 'value': value, 'residual': residual}).data)
        for name, value, residual in migration_constants().rows()
    ]
    outcome = ExperimentOutcome(
        command='constants', config={}, result={'constants': rows},
        summary={row['name']: row['value'] for row in rows},
    )
    if out is not None:
        outcome.files.append(write_report(outcome.command, outcome.config, outcome.result, out))
    return outcome


def persist(outcome: ExperimentOutcome):
    report = outcome.report()
    return ExperimentReport.objects.create(
        command=outcome.command,
        config=report['config'],
        summary=build_report(outcome.command, {}, outcome.summary)['result'],
        passed=outcome.passed,
        exit_code=outcome.exit_code,
    )
