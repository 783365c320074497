from filemigration import experiments
from filemigration.factor_lp import build_model, reference_solve
from filemigration.serializers import LP_MODEL_CHOICES, SOLVER_CHOICES, LpConfigSerializer

from ._common import ExperimentCommand, format_value


class Command(ExperimentCommand):
    help = "Build a factor-revealing LP, solve it and export it in LP text format."

    def add_arguments(self, parser):
        parser.add_argument('model', choices=LP_MODEL_CHOICES)
        parser.add_argument('--delta', type=float, nargs='+')
        parser.add_argument('--beta', type=float, nargs='+')
        parser.add_argument('--beta-prime', type=float, nargs=2)
        parser.add_argument('--phi', type=float)
        parser.add_argument('--beta2', type=float, help='weight of R2 in the long-phase minimiser')
        parser.add_argument('--multiset-pairs', choices=['on', 'off'], default='on')
        parser.add_argument('--opt-move-delta', type=float, help='single delta in every OPT move constraint')
        parser.add_argument('--solver', choices=SOLVER_CHOICES, default='simplex')
        parser.add_argument('--cross-check', action='store_true', help='also solve with the reference solver')
        self.add_common_arguments(parser)

    def handle(self, *args, **options):
        config = {
            'model': options['model'],
            'multiset_pairs': options['multiset_pairs'] == 'on',
            'solver': options['solver'],
        }
        for name in ('delta', 'beta', 'beta_prime', 'phi', 'beta2', 'opt_move_delta', 'tol'):
            if options[name] is not None:
                config[name] = options[name]

        serializer = self.validated(LpConfigSerializer(data=config))
        params = serializer.model_params()
        outcome = self.run_guarded(
            experiments.solve_lp_config, serializer.validated_data, params, serializer.canonical(),
            out=self.output_dir(options),
        )

        solution = outcome.result['solution']
        self.stdout.write(
            f"{outcome.result['model']}: {solution['status']} objective={format_value(solution['objective_value'])} "
            f"iterations={solution['iterations']} max violation={format_value(solution['max_violation'])}"
        )
        witness = outcome.result.get('witness')
        if witness:
            self.stdout.write(f"tight constraints: {len(witness['tight'])}")
            self.stdout.write('      ' + ' '.join(f"{e:>8}" for e in witness['elements']))
            for element, row in zip(witness['elements'], witness['table']):
                self.stdout.write(f"{element:>5} " + ' '.join(f"{format_value(v):>8.8}" for v in row))
        if options['cross_check'] and outcome.passed:
            reference = reference_solve(build_model(options['model'], **params))
            gap = abs((reference.objective_value or 0.0) - solution['objective_value'])
            self.stdout.write(f"reference ({reference.status}) objective={format_value(reference.objective_value)} gap={gap:.3g}")
        self.finish(outcome, options, f"solver returned {solution['status']}")
