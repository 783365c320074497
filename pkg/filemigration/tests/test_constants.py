from django.test import SimpleTestCase

from filemigration.conf import tolerance, tolerance_override
from filemigration.constants import migration_constants


class ConstantsTests(SimpleTestCase):

    def setUp(self):
        self.constants = migration_constants()

    def test_roots_of_defining_cubics(self):
        self.assertLessEqual(abs(self.constants.c0_residual), 1e-9)
        self.assertLessEqual(abs(self.constants.R0_residual), 1e-9)

    def test_values(self):
        c = self.constants
        self.assertAlmostEqual(c.c0, 1.8414, places=3)
        self.assertAlmostEqual(c.R0, 4.0862, places=3)
        self.assertAlmostEqual(c.alpha, 1.0 / (c.R0 - 1.0))
        self.assertAlmostEqual(c.cT, 1.3519, places=3)
        self.assertAlmostEqual(c.tLin, 1.2447, places=3)

    def test_rows_list_every_constant(self):
        names = [name for name, _, _ in self.constants.rows()]
        self.assertEqual(names, ['c0', 'R0', 'alpha', 'cT', 't'])

    def test_cached(self):
        self.assertIs(migration_constants(), self.constants)

    def test_recomputes_after_cache_clear(self):
        migration_constants.cache_clear()
        fresh = migration_constants()
        self.assertEqual(fresh, self.constants)
        self.assertIsNot(fresh, self.constants)


class ToleranceTests(SimpleTestCase):

    def test_override_nests_and_restores(self):
        base = tolerance()
        with tolerance_override(1e-3):
            self.assertEqual(tolerance(), 1e-3)
            with tolerance_override(None):
                self.assertEqual(tolerance(), 1e-3)
        self.assertEqual(tolerance(), base)
