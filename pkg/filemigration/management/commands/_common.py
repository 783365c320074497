"""Shared plumbing for the experiment commands."""
import json

from django.core.management.base import BaseCommand, CommandError

from filemigration import experiments
from filemigration.exceptions import MigrationLabError


def parse_value(text):
    lowered = text.lower()
    if lowered in ('true', 'on', 'yes'):
        return True
    if lowered in ('false', 'off', 'no'):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_params(pairs):
    """['n=5', 'D=8'] -> {'n': 5, 'D': 8}"""
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition('=')
        if not sep or not key:
            raise CommandError(f"expected key=value, got {pair!r}", returncode=experiments.EXIT_INVALID_INPUT)
        params[key] = parse_value(value)
    return params


def format_value(value):
    if isinstance(value, float):
        return f"{value:.9g}"
    if value is None:
        return '-'
    return str(value)


class ExperimentCommand(BaseCommand):
    """Validate a config with a serializer, run it, print, persist, exit with the outcome code."""

    def add_common_arguments(self, parser):
        parser.add_argument('--out', help='directory for report files (default: MIGRATIONLAB_OUTPUT_DIR)')
        parser.add_argument('--no-files', action='store_true', help='do not write report files')
        parser.add_argument('--save', action='store_true', help='persist an ExperimentReport row')
        parser.add_argument('--tol', type=float, help='override the slack tolerance for this run')
        parser.add_argument('--json', action='store_true', help='print the full report as JSON')

    def validated(self, serializer):
        if not serializer.is_valid():
            details = '; '.join(
                f"{field}: {errors[0] if isinstance(errors, list) else errors}"
                for field, errors in serializer.errors.items()
            )
            raise CommandError(f"invalid configuration: {details}", returncode=experiments.EXIT_INVALID_INPUT)
        return serializer

    def output_dir(self, options):
        if options['no_files']:
            return None
        return options['out'] or ''

    def run_guarded(self, runner, *args, **kwargs):
        try:
            return runner(*args, **kwargs)
        except MigrationLabError as exc:
            raise CommandError(str(exc), returncode=experiments.EXIT_INVALID_INPUT) from exc

    def finish(self, outcome, options, failure_message):
        if options['json']:
            self.stdout.write(json.dumps(outcome.report(), sort_keys=True, indent=2, default=str))
        for path in outcome.files:
            self.stdout.write(f"wrote {path}")
        if options['save']:
            saved = experiments.persist(outcome)
            self.stdout.write(f"saved report {saved.report_id}")
        if not outcome.passed:
            raise CommandError(failure_message, returncode=outcome.exit_code)
        self.stdout.write(self.style.SUCCESS(f"{outcome.command}: ok"))
