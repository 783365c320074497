import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from filemigration.experiments import EXIT_INVALID_INPUT, EXIT_NON_COMPETITIVE
from filemigration.instances import two_point_space, all_at_start_instance
from filemigration.models import ExperimentReport
from filemigration.serializers import dump_instance


def run(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


class ConstantsCommandTests(TestCase):

    def test_prints_table(self):
        output = run('constants', '--no-files')
        for name in ('c0', 'R0', 'alpha', 'cT'):
            self.assertIn(name, output)
        self.assertIn('constants: ok', output)

    def test_save_persists_a_report(self):
        output = run('constants', '--no-files', '--save')
        report = ExperimentReport.objects.get()
        self.assertIn(report.report_id, output)
        self.assertEqual(report.command, 'constants')
        self.assertTrue(report.passed)


class SimulateCommandTests(TestCase):

    def test_dlm_on_random_instance_writes_reports(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = run('simulate', 'n=4', 'T=60', '--alg', 'dlm', '--gen', 'random', '--D', '8',
                         '--seed', '3', '--out', tmp)
            names = {p.name for p in Path(tmp).iterdir()}
            payload = json.loads((Path(tmp) / 'simulate.json').read_text())
        self.assertEqual(names, {'simulate.json', 'instance-0.json', 'run-0.csv', 'ledger-0.csv'})
        self.assertEqual(payload['command'], 'simulate')
        self.assertEqual(payload['config']['params'], {'n': 4, 'T': 60, 'D': 8})
        self.assertTrue(payload['result']['report']['passed'])
        self.assertIn('simulate: ok', output)

    def test_same_config_gives_identical_report(self):
        texts = []
        for _ in range(2):
            with tempfile.TemporaryDirectory() as tmp:
                run('simulate', 'n=3', 'D=4', 'T=30', '--alg', 'mtlm', '--gen', 'random', '--seed', '9', '--out', tmp)
                texts.append((Path(tmp) / 'simulate.json').read_text())
        self.assertEqual(texts[0], texts[1])

    def test_instance_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_instance(all_at_start_instance(two_point_space(1.0, 4), 0, 8), Path(tmp) / 'in.json')
            output = run('simulate', '--alg', 'mtm', '--instance', str(path), '--no-files')
        self.assertIn('alg=0', output)
        self.assertIn('ratio=-', output)

    def test_repeated_runs(self):
        output = run('simulate', 'n=3', 'D=4', 'T=20', '--alg', 'dlm', '--gen', 'random', '--runs', '3', '--no-files')
        self.assertIn('run 2:', output)

    def test_invalid_inputs_exit_with_code_one(self):
        cases = [
            ('n=3', 'D=6', 'T=20', '--alg', 'dlm', '--gen', 'random'),
            ('n=3', 'D=4', 'T=20', 'colour=red', '--alg', 'dlm', '--gen', 'random'),
            ('n=3', 'D=4', 'T=20', '--alg', 'dlm', '--gen', 'linear'),
            ('--alg', 'dlm', '--gen', 'bipartite', '--runs', '2'),
            ('nonsense', '--alg', 'dlm', '--gen', 'random'),
        ]
        for args in cases:
            with self.assertRaises(CommandError, msg=args) as caught:
                run('simulate', *args, '--no-files')
            self.assertEqual(caught.exception.returncode, EXIT_INVALID_INPUT)


class LpCommandTests(TestCase):

    def test_mtlm_exports_model_and_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = run('lp', 'mtlm', '--out', tmp, '--cross-check')
            text = (Path(tmp) / 'mtlm.lp').read_text()
            payload = json.loads((Path(tmp) / 'mtlm.json').read_text())
        self.assertTrue(text.startswith('\\* mtlm *\\'))
        self.assertAlmostEqual(payload['result']['solution']['objective_value'], 4.0862, places=3)
        self.assertEqual(set(payload), {'command', 'config', 'version', 'result'})
        self.assertTrue(payload['result']['duals'])
        self.assertIn('tight constraints', output)
        self.assertIn('reference (optimal)', output)

    def test_dlm_with_highs(self):
        output = run('lp', 'dlm', '--solver', 'highs', '--no-files')
        self.assertIn('dlm: optimal', output)

    def test_wrong_vector_length(self):
        with self.assertRaises(CommandError) as caught:
            run('lp', 'dlm', '--delta', '1', '0.5', '--no-files')
        self.assertEqual(caught.exception.returncode, EXIT_INVALID_INPUT)


class LowerBoundCommandTests(TestCase):

    def test_mtlm_small_game(self):
        output = run('lowerbound', 'L=4', 'k=5', 'D=40', 'epochs=2', '--verify-state-graph', '--plays', '--no-files')
        self.assertIn('state graph L=4', output)
        self.assertIn('bipartite', output)
        self.assertIn('lowerbound: ok', output)
        self.assertIn('transition cost=', output)

    def test_stay_policy_exits_with_code_three(self):
        with self.assertRaises(CommandError) as caught:
            run('lowerbound', 'L=3', 'k=3', 'D=40', 'epochs=1', '--policy', 'stay', '--max-phases', '5', '--no-files')
        self.assertEqual(caught.exception.returncode, EXIT_NON_COMPETITIVE)

    def test_c_below_cT_is_rejected(self):
        with self.assertRaises(CommandError) as caught:
            run('lowerbound', 'L=3', 'k=3', 'D=40', '--c', '1.2', '--no-files')
        self.assertEqual(caught.exception.returncode, EXIT_INVALID_INPUT)

    def test_writes_epoch_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            run('lowerbound', 'L=3', 'k=3', 'D=40', 'epochs=1', '--out', tmp)
            self.assertTrue((Path(tmp) / 'epochs.csv').exists())
            self.assertTrue((Path(tmp) / 'lowerbound.json').exists())
