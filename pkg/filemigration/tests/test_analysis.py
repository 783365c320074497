import csv
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from filemigration.algorithms import LONG, SHORT, dlm_policy, mtm_policy, run_online
from filemigration.analysis import (
    LEDGER_CSV_COLUMNS, chain_consistency, competitive_report, phase_partition, verify_dlm_phase,
    verify_proof_chain, write_ledger_csv,
)
from filemigration.exceptions import InstanceError, PhaseError
from filemigration.instances import Instance, all_at_start_instance, random_instance, two_point_space
from filemigration.offline import opt_dp


def dlm_run(instance):
    run = run_online(dlm_policy(), instance)
    return run, opt_dp(instance)


class PhasePartitionTests(SimpleTestCase):

    def test_short_phase_ledger(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1,) * 7)
        run, opt = dlm_run(instance)
        ledger, = phase_partition(run, opt)
        self.assertEqual(ledger.kind, SHORT)
        self.assertEqual(len(ledger.opt_marks), 3)
        self.assertEqual([len(p) for p in ledger.part_requests], [4, 3])
        self.assertEqual(ledger.c_alg, 11.0)
        self.assertAlmostEqual(ledger.c_opt, opt.cost)
        self.assertGreaterEqual(verify_dlm_phase(ledger), 0.0)

    def test_long_phase_ledger(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1,) * 4 + (0,) * 3 + (1,) * 2)
        run, opt = dlm_run(instance)
        ledger, = phase_partition(run, opt)
        self.assertEqual(ledger.kind, LONG)
        self.assertEqual(len(ledger.opt_marks), 4)
        self.assertEqual([len(p) for p in ledger.part_requests], [4, 3, 2])

    def test_rejects_non_dlm_runs(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1,) * 8)
        run = run_online(mtm_policy(), instance)
        with self.assertRaises(PhaseError):
            phase_partition(run, opt_dp(instance))

    def test_trajectory_length_must_match(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1,) * 7)
        run, _ = dlm_run(instance)
        shorter = opt_dp(Instance(instance.space, 0, (1,) * 6))
        with self.assertRaises(InstanceError):
            phase_partition(run, shorter)


class ProofChainTests(SimpleTestCase):

    def test_random_instances_keep_every_phase_nonnegative(self):
        rng = np.random.default_rng(11)
        kinds = set()
        for case in range(1000):
            n = int(rng.integers(2, 7))
            D = int(rng.choice([4, 8, 12]))
            T = int(rng.integers(D, 8 * D))
            instance = random_instance(n, D, T, seed=int(rng.integers(0, 2 ** 31)),
                                       kind='euclidean-sample' if case % 2 else 'random-graph-shortest-path')
            run, opt = dlm_run(instance)
            for ledger in phase_partition(run, opt):
                kinds.add(ledger.kind)
                slack = verify_dlm_phase(ledger)
                self.assertGreaterEqual(slack, -1e-9, msg=f"case {case} phase {ledger.phase_id}")
                links = verify_proof_chain(ledger)
                for link in links:
                    self.assertGreaterEqual(link.slack, -1e-7, msg=f"case {case}: {link.name}")
                self.assertAlmostEqual(chain_consistency(ledger, links), 0.0, delta=1e-7)
        self.assertEqual(kinds, {SHORT, LONG})

    def test_adversarial_requests_far_from_dlm(self):
        # requests alternate between the two ends of a long edge
        space = two_point_space(5.0, 8)
        requests = tuple(([1] * 14 + [0] * 4) * 6)
        run, opt = dlm_run(Instance(space, 0, requests))
        for ledger in phase_partition(run, opt):
            self.assertGreaterEqual(verify_dlm_phase(ledger), -1e-9)


class CompetitiveReportTests(SimpleTestCase):

    def test_all_requests_at_start_cost_nothing(self):
        instance = all_at_start_instance(two_point_space(1.0, 4), 0, 20)
        report = competitive_report([dlm_run(instance)])
        self.assertEqual(report.total_alg, 0.0)
        self.assertIsNone(report.ratio)
        self.assertTrue(report.warnings)
        self.assertTrue(report.passed)

    def test_infinite_ratio_when_opt_is_free(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1,) * 3)
        run = run_online(mtm_policy(), instance)
        report = competitive_report([(run, opt_dp(instance, free_start=True))])
        self.assertEqual(report.ratio, math.inf)

    def test_aggregates_runs(self):
        pairs = [dlm_run(random_instance(4, 8, 60, seed=s)) for s in range(3)]
        report = competitive_report(pairs)
        self.assertAlmostEqual(report.total_alg, sum(run.total_cost for run, _ in pairs))
        self.assertAlmostEqual(report.total_opt, sum(opt.cost for _, opt in pairs))
        self.assertEqual(len(report.phase_slacks), sum(len(run.phase_boundaries) for run, _ in pairs))
        self.assertGreaterEqual(report.min_slack, -1e-9)
        self.assertTrue(report.passed)

    def test_needs_runs(self):
        with self.assertRaises(InstanceError):
            competitive_report([])


class LedgerCsvTests(SimpleTestCase):

    def test_columns(self):
        run, opt = dlm_run(random_instance(3, 4, 40, seed=5))
        ledgers = phase_partition(run, opt)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_ledger_csv(ledgers, Path(tmp) / 'ledger.csv')
            with open(path, newline='') as handle:
                reader = csv.DictReader(handle)
                rows = list(reader)
                self.assertEqual(tuple(reader.fieldnames), LEDGER_CSV_COLUMNS)
        self.assertEqual(len(rows), len(ledgers))
