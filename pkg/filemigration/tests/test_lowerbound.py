import csv
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from filemigration.algorithms import fixed_phase_adapter, mtlm_move, mtm_policy, stay_move
from filemigration.constants import migration_constants
from filemigration.exceptions import (
    InstanceError, NonCompetitivePolicyError, PlayStateError, PolicyError,
)
from filemigration.lowerbound import (
    EPOCH_CSV_COLUMNS, GameState, RandomMoveRule, bipartite_play, classify_distance, epsilon,
    finishing_play, L_of_c, linear_play, min_L_over_c, run_epochs, verify_state_graph, write_epoch_csv,
)


def constant_rule(point):
    return lambda pos, R, space: point


class WaitingRule:
    """Stays for the first phases, then jumps to point 1."""

    def __init__(self, wait):
        self.wait = wait
        self.calls = 0

    def __call__(self, pos, R, space):
        self.calls += 1
        return 1 if self.calls > self.wait else pos


class EpsilonTests(SimpleTestCase):

    def test_formula(self):
        const = migration_constants()
        two_alpha = 2 * const.alpha
        self.assertAlmostEqual(epsilon(12, 200), max(two_alpha ** 12 / (1 - two_alpha), 4 * const.R0 / 204))

    def test_decreases_with_L_and_k(self):
        self.assertGreater(epsilon(3, 100), epsilon(8, 100))
        self.assertGreater(epsilon(20, 10), epsilon(20, 1000))

    def test_rejects_small_parameters(self):
        with self.assertRaises(InstanceError):
            epsilon(0, 10)
        with self.assertRaises(InstanceError):
            epsilon(5, 2)


class BoundFunctionTests(SimpleTestCase):

    def test_at_least_R0_up_to_cT(self):
        const = migration_constants()
        for c in np.linspace(0.05, const.cT, 40):
            self.assertGreaterEqual(L_of_c(c), const.R0 - 1e-6, msg=f"c={c}")

    def test_minimum_over_c(self):
        c, value = min_L_over_c()
        self.assertAlmostEqual(value, 3.847, delta=0.01)
        self.assertGreater(c, migration_constants().cT)

    def test_grid_resolution_does_not_matter(self):
        self.assertAlmostEqual(L_of_c(1.0), L_of_c(1.0, grid_points=40_000), delta=1e-6)


class GameStateTests(SimpleTestCase):

    def test_classify(self):
        two_alpha = 2 * migration_constants().alpha
        self.assertEqual(classify_distance(0.0, 5), GameState.S())
        self.assertEqual(classify_distance(two_alpha ** 3, 5), GameState.A(3))
        self.assertEqual(classify_distance(two_alpha ** 6, 5).tag, 'F')
        self.assertEqual(str(GameState.A(2)), 'A2')

    def test_F_needs_positive_distance(self):
        with self.assertRaises(PlayStateError):
            GameState.F(0.0)


class LinearPlayTests(SimpleTestCase):

    def setUp(self):
        self.const = migration_constants()
        self.c0 = self.const.c0

    def test_policy_that_moves(self):
        policy = fixed_phase_adapter(constant_rule(1), self.c0)
        outcome = linear_play(policy, self.c0, 400, 12, 200)
        n_b = outcome.instance.requests.count(1)
        self.assertEqual(outcome.case, 'moved')
        self.assertEqual(outcome.c_alg, n_b + 400)
        self.assertEqual(outcome.c_opt, n_b)
        self.assertEqual(outcome.next, GameState.A(0))
        self.assertAlmostEqual(outcome.gain, n_b + 400 - (self.const.R0 - outcome.eps) * n_b)
        self.assertGreaterEqual(outcome.gain, outcome.bound)

    def test_policy_that_stays(self):
        policy = fixed_phase_adapter(stay_move, self.c0)
        outcome = linear_play(policy, self.c0, 400, 12, 200)
        self.assertEqual(outcome.case, 'stayed')
        self.assertEqual(outcome.c_alg, outcome.instance.requests.count(1))
        self.assertEqual(outcome.c_opt, 400.0)
        self.assertEqual(outcome.next, GameState.A(0))
        self.assertGreaterEqual(outcome.gain, outcome.bound)

    def test_gain_close_to_closed_form(self):
        R0 = self.const.R0
        policy = fixed_phase_adapter(constant_rule(1), self.c0)
        outcome = linear_play(policy, self.c0, 4000, 12, 200)
        # moving costs t D + D against t D, with t = 1 + 1/R0
        expected = (1 / R0 + 1 - R0) * 4000 + outcome.eps * self.const.tLin * 4000
        self.assertAlmostEqual(outcome.gain, expected, delta=R0 + 1)

    def test_below_cT_is_flagged(self):
        c = 1.3
        outcome = linear_play(fixed_phase_adapter(stay_move, c), c, 100, 5, 10)
        self.assertEqual(outcome.flags, ('below-cT',))

    def test_preconditions(self):
        policy = fixed_phase_adapter(stay_move, self.c0)
        with self.assertRaises(PlayStateError):
            linear_play(policy, self.c0, 400, 12, 200, state=GameState.A(0))
        with self.assertRaises(PolicyError):
            linear_play(mtm_policy(), self.c0, 400, 12, 200)


class BipartitePlayTests(SimpleTestCase):

    def setUp(self):
        self.const = migration_constants()
        self.c0 = self.const.c0
        self.f = 2 * self.const.alpha

    def play(self, rule, **kwargs):
        policy = fixed_phase_adapter(rule, self.c0)
        return bipartite_play(policy, 5, self.f, self.c0, 40, 1, 4, **kwargs)

    def test_stay_keeps_level(self):
        outcome = self.play(stay_move)
        self.assertEqual(outcome.case, 'stay')
        self.assertEqual(outcome.next, GameState.A(1))
        self.assertEqual(outcome.bound, 0.0)
        self.assertGreaterEqual(outcome.gain, 0.0)

    def test_move_to_Q_climbs(self):
        outcome = self.play(constant_rule(1))
        self.assertEqual(outcome.case, 'to-Q')
        self.assertEqual(outcome.next, GameState.A(2))
        self.assertAlmostEqual(outcome.bound, self.f * 40)
        self.assertGreaterEqual(outcome.gain, outcome.bound)
        self.assertNotEqual(outcome.opt_trajectory[-1], 1)

    def test_move_to_S_leaves_the_ladder(self):
        outcome = self.play(constant_rule(6))
        self.assertEqual(outcome.case, 'to-S')
        self.assertEqual(outcome.next.tag, 'F')
        self.assertAlmostEqual(outcome.next.dist, 3 * self.const.alpha * self.f)
        self.assertGreaterEqual(outcome.gain, outcome.bound)

    def test_order_permutes_requests(self):
        outcome = self.play(stay_move, order=[4, 3, 2, 1, 0])
        self.assertEqual(outcome.instance.requests[0], 10)

    def test_level_must_be_below_L(self):
        policy = fixed_phase_adapter(stay_move, self.c0)
        with self.assertRaises(PlayStateError):
            bipartite_play(policy, 5, self.f, self.c0, 40, 4, 4)
        with self.assertRaises(PlayStateError):
            bipartite_play(policy, 5, self.f, self.c0, 40, 1, 4, state=GameState.S())


class FinishingPlayTests(SimpleTestCase):

    def setUp(self):
        self.c0 = migration_constants().c0

    def test_immediate_migration_meets_bound_exactly(self):
        policy = fixed_phase_adapter(constant_rule(1), self.c0)
        outcome = finishing_play(policy, 0.25, self.c0, 40)
        self.assertEqual(outcome.phases_used, 1)
        self.assertEqual(outcome.c_opt, 0.0)
        self.assertEqual(outcome.next, GameState.S())
        self.assertAlmostEqual(outcome.gain, outcome.bound)

    def test_waiting_pays_per_phase(self):
        policy = fixed_phase_adapter(WaitingRule(2), self.c0)
        outcome = finishing_play(policy, 0.5, self.c0, 40)
        n = 74
        c_eff = n / 40
        self.assertEqual(outcome.phases_used, 3)
        self.assertAlmostEqual(outcome.c_alg, (3 * c_eff + 1) * 0.5 * 40)
        self.assertGreaterEqual(outcome.gain, outcome.bound)

    def test_policy_that_never_migrates(self):
        policy = fixed_phase_adapter(stay_move, self.c0)
        with self.assertRaises(NonCompetitivePolicyError) as caught:
            finishing_play(policy, 0.5, self.c0, 40, max_phases=4)
        self.assertEqual(caught.exception.phases, 4)
        self.assertAlmostEqual(caught.exception.c_alg, 4 * 74 * 0.5)

    def test_preconditions(self):
        policy = fixed_phase_adapter(constant_rule(1), self.c0)
        with self.assertRaises(PlayStateError):
            finishing_play(policy, 0.0, self.c0, 40)
        with self.assertRaises(PlayStateError):
            finishing_play(policy, 0.5, self.c0, 40, state=GameState.S())


class RandomPolicySweepTests(SimpleTestCase):
    """Every play against a random policy gains at least its closed-form bound."""

    def test_gain_never_below_bound(self):
        const = migration_constants()
        c0 = const.c0
        two_alpha = 2 * const.alpha
        rng = np.random.default_rng(17)
        plays = 0
        for L in range(3, 9):
            for k in range(3, 11):
                for D in (40, 80):
                    for _ in range(35):
                        seed = int(rng.integers(0, 2 ** 31))
                        policy = fixed_phase_adapter(RandomMoveRule(seed, stay_probability=0.3), c0)
                        level = int(rng.integers(0, L))
                        outcomes = [
                            linear_play(policy, c0, D, L, k),
                            bipartite_play(policy, k, two_alpha ** level, c0, D, level, L,
                                           order=rng.permutation(k)),
                            finishing_play(policy, float(rng.uniform(0.05, 1.0)), c0, D, max_phases=200),
                        ]
                        for outcome in outcomes:
                            self.assertGreaterEqual(
                                outcome.gain, outcome.bound - 1e-9 * D,
                                msg=f"{outcome.kind} L={L} k={k} D={D} seed={seed}",
                            )
                        plays += len(outcomes)
        self.assertGreaterEqual(plays, 10_000)


class EpochTests(SimpleTestCase):

    def test_mtlm_ratio_reaches_threshold(self):
        const = migration_constants()
        policy = fixed_phase_adapter(mtlm_move, const.c0, name='mtlm')
        ledger = run_epochs(policy, 12, 200, const.c0, 400, num_epochs=3, seed=1)
        self.assertEqual(len(ledger.epochs), 3)
        self.assertGreaterEqual(ledger.ratio, const.R0 - ledger.eps - 0.01)
        for summary in ledger.epochs:
            self.assertFalse(summary.closed_early)
            self.assertEqual(summary.transition_cost, 0.0)
            self.assertGreaterEqual(summary.gain, -1e-9 * 400)
        kinds = [outcome.kind for _, outcome in ledger.plays]
        self.assertEqual(kinds.count('linear'), 3)
        self.assertEqual(kinds.count('finishing'), 3)

    def test_stay_policy_is_not_competitive(self):
        c0 = migration_constants().c0
        policy = fixed_phase_adapter(stay_move, c0, name='stay')
        with self.assertRaises(NonCompetitivePolicyError):
            run_epochs(policy, 3, 3, c0, 40, num_epochs=1, max_phases=5)

    def test_loop_limit_closes_the_epoch(self):
        c0 = migration_constants().c0
        # stays through the linear and bipartite plays, migrates in the finishing play
        policy = fixed_phase_adapter(WaitingRule(3), c0, name='waiting')
        ledger = run_epochs(policy, 4, 5, c0, 40, num_epochs=1, max_loops=2)
        summary, = ledger.epochs
        self.assertTrue(summary.closed_early)
        self.assertEqual(ledger.plays[-1][1].kind, 'finishing')
        # only the linear play climbs, S to A0; the bipartite plays loop at A0
        linear = ledger.plays[0][1]
        self.assertEqual(str(linear.next), 'A0')
        self.assertGreater(linear.c_opt, 0.0)
        self.assertEqual(summary.transition_cost, linear.c_opt)
        self.assertEqual(ledger.transition_cost, linear.c_opt)
        self.assertEqual([row['transition'] for row in ledger.rows()], [True] + [False] * (len(ledger.plays) - 1))
        warning, = ledger.report().warnings
        self.assertIn('may be negative', warning)

    def test_epoch_csv(self):
        c0 = migration_constants().c0
        policy = fixed_phase_adapter(RandomMoveRule(0), c0)
        ledger = run_epochs(policy, 3, 3, c0, 40, num_epochs=2, seed=0, max_phases=500)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_epoch_csv(ledger, Path(tmp) / 'epochs.csv')
            with open(path, newline='') as handle:
                reader = csv.DictReader(handle)
                rows = list(reader)
                self.assertEqual(tuple(reader.fieldnames), EPOCH_CSV_COLUMNS)
        self.assertEqual(len(rows), len(ledger.plays))


class StateGraphTests(SimpleTestCase):

    def test_closed_paths_at_cT(self):
        const = migration_constants()
        report = verify_state_graph(12, 200, const.cT)
        self.assertAlmostEqual(report.ladder_gain, 0.0, delta=1e-12)
        self.assertEqual(len(report.detour_gains), 12)
        self.assertGreaterEqual(report.min_gain, -1e-12)
        self.assertGreater(report.closed_form, 0.768)

    def test_rejects_c_below_cT(self):
        with self.assertRaises(PlayStateError):
            verify_state_graph(12, 200, 1.0)
