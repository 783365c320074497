from django.core.management.base import CommandError

from filemigration import experiments
from filemigration.algorithms import POLICIES
from filemigration.exceptions import MigrationLabError
from filemigration.serializers import GENERATOR_CHOICES, InstanceSerializer, SimulateConfigSerializer, load_instance

from ._common import ExperimentCommand, format_value, parse_params


class Command(ExperimentCommand):
    help = "Run an online policy on an instance, compare it with the offline optimum and check every DLM phase."

    def add_arguments(self, parser):
        parser.add_argument('params', nargs='*', help='generator parameters as key=value')
        parser.add_argument('--alg', required=True, choices=sorted(POLICIES))
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--gen', choices=GENERATOR_CHOICES)
        source.add_argument('--instance', help='instance JSON file')
        parser.add_argument('--D', type=int, dest='file_size', help='shorthand for D=...')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--runs', type=int, default=1, help='repeat over seeds seed..seed+runs-1')
        parser.add_argument('--workers', type=int, help='worker processes for repeated runs')
        parser.add_argument('--free-start', action='store_true', help='let OPT choose its start point')
        self.add_common_arguments(parser)

    def handle(self, *args, **options):
        config = {
            'alg': options['alg'],
            'runs': options['runs'],
            'free_start': options['free_start'],
        }
        if options['instance']:
            if options['params']:
                raise CommandError("key=value parameters only apply to --gen", returncode=experiments.EXIT_INVALID_INPUT)
            try:
                instance = load_instance(options['instance'])
            except MigrationLabError as exc:
                raise CommandError(str(exc), returncode=experiments.EXIT_INVALID_INPUT) from exc
            config['instance'] = InstanceSerializer(instance).data
        else:
            config['gen'] = options['gen']
            config['params'] = parse_params(options['params'])
            if options['file_size'] is not None:
                config['params']['D'] = options['file_size']
        if options['seed'] is not None:
            config['seed'] = options['seed']
        if options['tol'] is not None:
            config['tol'] = options['tol']

        serializer = self.validated(SimulateConfigSerializer(data=config))
        outcome = self.run_guarded(
            experiments.simulate, serializer.validated_data, serializer.canonical(),
            out=self.output_dir(options), workers=options['workers'],
        )

        report = outcome.result['report']
        for i, run in enumerate(outcome.result['runs']):
            self.stdout.write(
                f"run {i}: {run['policy']} steps={run['steps']} phases={run['complete_phases']} "
                f"alg={format_value(run['total_cost'])} opt={format_value(run['opt_cost'])}"
            )
        self.stdout.write(
            f"total alg={format_value(report['total_alg'])} opt={format_value(report['total_opt'])} "
            f"ratio={format_value(report['ratio'])} offset={format_value(report['additive_offset'])}"
        )
        if report['phase_count']:
            self.stdout.write(f"phases checked={report['phase_count']} min slack={format_value(report['min_slack'])}")
        for warning in report['warnings']:
            self.stdout.write(self.style.WARNING(warning))
        self.finish(outcome, options, f"{len(report['negative_phases'])} phase(s) with negative slack")
