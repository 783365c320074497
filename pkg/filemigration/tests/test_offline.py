import numpy as np
from django.test import SimpleTestCase

from filemigration.exceptions import InstanceError, PhaseError
from filemigration.instances import Instance, random_instance, two_point_space
from filemigration.metric import MetricSpace
from filemigration.offline import (
    check_opt_lower_bound, enumerate_opt, opt_dp, segment_costs, trajectory_cost,
)


class OptDpTests(SimpleTestCase):

    def test_stays_when_moving_does_not_pay(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1, 1, 1))
        result = opt_dp(instance)
        self.assertEqual(result.cost, 3.0)
        self.assertEqual(result.trajectory, (0, 0, 0, 0))

    def test_moves_ahead_of_a_long_run(self):
        instance = Instance(two_point_space(1.0, 2), 0, (1,) * 10)
        result = opt_dp(instance)
        # serve the first request from a, then move
        self.assertEqual(result.cost, 3.0)
        self.assertEqual(result.trajectory[:2], (0, 1))
        self.assertEqual(result.serve_cost + result.move_cost, result.cost)

    def test_free_start(self):
        instance = Instance(two_point_space(1.0, 4), 0, (1, 1, 1))
        result = opt_dp(instance, free_start=True)
        self.assertEqual(result.cost, 0.0)
        self.assertEqual(result.start, 1)

    def test_tied_end_point_prefers_staying(self):
        # p0 and p1 coincide, so ending at p0 costs the same as staying at p1
        space = MetricSpace([[0, 0, 1], [0, 0, 1], [1, 1, 0]], 1)
        result = opt_dp(Instance(space, 1, (2,)))
        self.assertEqual(result.cost, 1.0)
        self.assertEqual(result.trajectory, (1, 1))

    def test_empty_request_sequence(self):
        result = opt_dp(Instance(two_point_space(1.0, 4), 1, ()))
        self.assertEqual(result.cost, 0.0)
        self.assertEqual(result.trajectory, (1,))

    def test_matches_enumeration_on_small_instances(self):
        rng = np.random.default_rng(2024)
        for case in range(500):
            n = int(rng.integers(1, 5))
            T = int(rng.integers(1, 7))
            D = int(rng.integers(1, 5))
            instance = random_instance(n, D, T, seed=int(rng.integers(0, 2 ** 31)))
            free = bool(case % 5 == 0)
            dp = opt_dp(instance, free_start=free)
            brute = enumerate_opt(instance, free_start=free)
            self.assertAlmostEqual(dp.cost, brute.cost, delta=1e-9, msg=f"case {case}")
            recomputed = trajectory_cost(instance.space, dp.start, instance.requests, dp.trajectory)
            self.assertAlmostEqual(recomputed, dp.cost, delta=1e-9)

    def test_enumeration_refuses_huge_instances(self):
        instance = random_instance(6, 4, 12, seed=0)
        with self.assertRaises(InstanceError):
            enumerate_opt(instance)


class TrajectoryCostTests(SimpleTestCase):

    def test_serve_then_move(self):
        space = two_point_space(2.0, 3)
        serve, move = segment_costs(space, (0, 1, 1), (1, 0))
        # r1 served from a, r2 served from b
        self.assertEqual(serve, 2.0 + 2.0)
        self.assertEqual(move, 6.0)

    def test_wrong_length_or_start(self):
        space = two_point_space(1.0, 4)
        with self.assertRaises(InstanceError):
            segment_costs(space, (0, 1), (1, 1))
        with self.assertRaises(InstanceError):
            trajectory_cost(space, 0, (1,), (1, 1))


class OptLowerBoundTests(SimpleTestCase):

    def test_holds_on_random_segments(self):
        rng = np.random.default_rng(7)
        worst = np.inf
        for _ in range(10_000):
            n = int(rng.integers(1, 6))
            D = int(rng.integers(1, 9))
            instance = random_instance(n, D, 1, seed=int(rng.integers(0, 2 ** 31)))
            m = int(rng.integers(0, 2 * D + 1))
            requests = tuple(int(r) for r in rng.integers(0, n, size=m))
            segment = tuple(int(p) for p in rng.integers(0, n, size=m + 1))
            worst = min(worst, check_opt_lower_bound(segment, requests, instance.space))
        self.assertGreaterEqual(worst, -1e-9)

    def test_tight_when_opt_stays_on_the_requests(self):
        space = two_point_space(1.0, 4)
        self.assertAlmostEqual(check_opt_lower_bound((0,) * 5, (0,) * 4, space), 0.0)

    def test_too_many_requests(self):
        space = two_point_space(1.0, 2)
        with self.assertRaises(PhaseError):
            check_opt_lower_bound((0,) * 6, (1,) * 5, space)
        with self.assertRaises(PhaseError):
            check_opt_lower_bound((0, 0), (1,), space, D=3)
