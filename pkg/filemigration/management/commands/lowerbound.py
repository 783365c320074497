from django.core.management.base import CommandError

from filemigration import experiments
from filemigration.exceptions import NonCompetitivePolicyError
from filemigration.serializers import LOWERBOUND_POLICY_CHOICES, LowerBoundConfigSerializer

from ._common import ExperimentCommand, format_value, parse_params

OPTION_KEYS = ('L', 'k', 'D', 'c', 'epochs', 'seed', 'max_loops', 'max_phases')


class Command(ExperimentCommand):
    help = "Play the adversarial epochs against a fixed-phase policy and report the realised ratio."

    def add_arguments(self, parser):
        parser.add_argument('params', nargs='*', help='L=, k=, D=, c=, epochs= as key=value')
        parser.add_argument('--policy', choices=LOWERBOUND_POLICY_CHOICES, default='mtlm')
        parser.add_argument('--L', type=int)
        parser.add_argument('--k', type=int)
        parser.add_argument('--D', type=int)
        parser.add_argument('--c', type=float)
        parser.add_argument('--epochs', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument('--max-loops', type=int)
        parser.add_argument('--max-phases', type=int)
        parser.add_argument('--verify-state-graph', action='store_true')
        parser.add_argument('--plays', action='store_true', help='print every play')
        self.add_common_arguments(parser)

    def handle(self, *args, **options):
        config = parse_params(options['params'])
        unknown = sorted(set(config) - set(OPTION_KEYS))
        if unknown:
            raise CommandError(f"unknown parameters: {unknown}", returncode=experiments.EXIT_INVALID_INPUT)
        for key in OPTION_KEYS:
            if options[key] is not None:
                config[key] = options[key]
        config['policy'] = options['policy']
        config['verify_state_graph'] = options['verify_state_graph']
        if options['tol'] is not None:
            config['tol'] = options['tol']

        serializer = self.validated(LowerBoundConfigSerializer(data=config))
        try:
            outcome = self.run_guarded(
                experiments.lowerbound, serializer.validated_data, serializer.canonical(),
                out=self.output_dir(options),
            )
        except CommandError as exc:
            if isinstance(exc.__cause__, NonCompetitivePolicyError):
                cause = exc.__cause__
                raise CommandError(
                    f"non-competitive policy: {cause} (paid {cause.c_alg:.6g} over {cause.phases} phases)",
                    returncode=experiments.EXIT_NON_COMPETITIVE,
                ) from cause
            raise

        result = outcome.result
        graph = result.get('state_graph')
        if graph:
            self.stdout.write(
                f"state graph L={graph['L']} c={format_value(graph['c'])}: ladder={format_value(graph['ladder_gain'])} "
                f"min detour={format_value(min(graph['detour_gains']))} closed form={format_value(graph['closed_form'])}"
            )
        if options['plays']:
            for play in result['plays']:
                self.stdout.write(
                    f"epoch {play['epoch']:>3} {play['kind']:<10} {play['state_in']:>6} -> {play['next']:<12} "
                    f"{play['case']:<12} gain={format_value(play['gain'])} bound={format_value(play['bound'])}"
                )
        self.stdout.write(
            f"eps={format_value(result['eps'])} threshold={format_value(result['threshold'])} "
            f"ratio={format_value(result['ratio'])} over {len(result['epochs'])} epochs "
            f"transition cost={format_value(result['transition_cost'])}"
        )
        self.finish(outcome, options, f"{result['bound_violations']} play(s) below their bound")
