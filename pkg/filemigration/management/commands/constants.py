from filemigration import experiments

from ._common import ExperimentCommand, format_value


class Command(ExperimentCommand):
    help = "Print c0, R0, alpha, c_T and t with the residuals of their defining polynomials."

    def add_arguments(self, parser):
        self.add_common_arguments(parser)

    def handle(self, *args, **options):
        outcome = experiments.constants_table(out=self.output_dir(options))
        self.stdout.write(f"{'name':<6} {'value':>18} {'residual':>12}")
        for row in outcome.result['constants']:
            residual = '' if row['residual'] is None else f"{row['residual']:.3g}"
            self.stdout.write(f"{row['name']:<6} {format_value(row['value']):>18} {residual:>12}")
        self.finish(outcome, options, "constants failed")
