"""Tolerances and other settings shared by the numeric modules."""
from contextlib import contextmanager

DEFAULT_TOLERANCE = 1e-9
DEFAULT_LP_TOLERANCE = 1e-7

_override = []


def _setting(name, default):
    from django.conf import settings
    if not settings.configured:
        return default
    return getattr(settings, name, default)


def tolerance():
    """Absolute tolerance τ used by every metric and slack comparison."""
    if _override:
        return _override[-1]
    return _setting('MIGRATIONLAB_TOL', DEFAULT_TOLERANCE)


def lp_tolerance():
    return _setting('MIGRATIONLAB_LP_TOL', DEFAULT_LP_TOLERANCE)


def output_dir():
    return _setting('MIGRATIONLAB_OUTPUT_DIR', 'reports')


def max_workers():
    return _setting('MIGRATIONLAB_MAX_WORKERS', 1)


@contextmanager
def tolerance_override(value):
    """Temporarily replace τ (a RunConfig override beats the environment)."""
    if value is None:
        yield
        return
    _override.append(float(value))
    try:
        yield
    finally:
        _override.pop()
