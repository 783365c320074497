"""
Report files shared by the management commands and the API.

Every JSON report has the shape {"command", "config", "version", "result"}
and is written with sorted keys and no timestamps, so the same config gives
byte-identical files.
"""
import json
import logging
import math
from pathlib import Path

import numpy as np

from migrationlab import __version__

from .conf import output_dir

logger = logging.getLogger(__name__)


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        if math.isnan(value):
            return None
        return value
    return value


def build_report(command, config, result):
    return {
        'command': command,
        'config': _plain(config),
        'version': __version__,
        'result': _plain(result),
    }


def canonical_json(payload) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + '\n'


def report_dir(out=None) -> Path:
    path = Path(out or output_dir())
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(payload, path) -> Path:
    path = Path(path)
    path.write_text(canonical_json(payload))
    logger.debug("wrote %s", path)
    return path


def write_report(command, config, result, out=None, name=None) -> Path:
    report = build_report(command, config, result)
    return write_json(report, report_dir(out) / f"{name or command}.json")
