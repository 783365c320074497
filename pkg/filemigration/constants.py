"""
Numeric constants of the phase-based algorithms and of the lower bound.

c0 is the MTLM phase factor (positive root of 3c^3 - 8c - 4), R0 its
competitive ratio (largest real root of R^3 - 5R^2 + 3R + 3). The remaining
constants are closed forms of R0.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq


def _phase_cubic(c):
    return 3.0 * c ** 3 - 8.0 * c - 4.0


def _phase_cubic_prime(c):
    return 9.0 * c ** 2 - 8.0


def _ratio_cubic(r):
    return r ** 3 - 5.0 * r ** 2 + 3.0 * r + 3.0


def _ratio_cubic_prime(r):
    return 3.0 * r ** 2 - 10.0 * r + 3.0


def _polished_root(f, fprime, lo, hi, steps=3):
    """Bracketed root followed by a few Newton steps."""
    x = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(steps):
        slope = fprime(x)
        if slope == 0.0:
            break
        candidate = x - f(x) / slope
        if not lo <= candidate <= hi or abs(f(candidate)) >= abs(f(x)):
            break
        x = candidate
    return x


@dataclass(frozen=True)
class MigrationConstants:
    c0: float
    R0: float
    alpha: float
    cT: float
    tLin: float

    @property
    def c0_residual(self):
        return _phase_cubic(self.c0)

    @property
    def R0_residual(self):
        return _ratio_cubic(self.R0)

    def rows(self):
        """(name, value, residual) rows for tables."""
        return [
            ('c0', self.c0, self.c0_residual),
            ('R0', self.R0, self.R0_residual),
            ('alpha', self.alpha, None),
            ('cT', self.cT, None),
            ('t', self.tLin, None),
        ]


@lru_cache(maxsize=None)
def migration_constants() -> MigrationConstants:
    # 3c^3 - 8c - 4 has a single positive root, inside (1, 2)
    c0 = _polished_root(_phase_cubic, _phase_cubic_prime, 1.0, 2.0)
    # the other two real roots of the ratio cubic lie below 2
    R0 = _polished_root(_ratio_cubic, _ratio_cubic_prime, 4.0, 5.0)
    alpha = 1.0 / (R0 - 1.0)
    cT = 2.0 * (R0 + 1.0) / (R0 ** 2 - 2.0 * R0 - 1.0)
    tLin = 1.0 + 1.0 / R0
    return MigrationConstants(c0=c0, R0=R0, alpha=alpha, cT=cT, tLin=tLin)
