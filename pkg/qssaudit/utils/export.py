"""
Deterministic CSV and JSON writers.

Identical inputs give byte-identical files: floats are written with 17
significant digits in CSV and as shortest round-trip reprs in JSON, keys
are sorted and non-finite numbers become strings.
"""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..sim.trajectory import Trajectory

_NON_FINITE = {math.inf: "Infinity", -math.inf: "-Infinity"}


def write_csv(path: str | Path, traj: Trajectory) -> Path:
    """One row per accepted step: ``t`` then every variable in layout order."""
    path = Path(path)
    df = pd.DataFrame(traj.as_matrix(), columns=list(traj.names))
    df.insert(0, "t", traj.times.astype(float))
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "NaN"
        return _NON_FINITE.get(value, value)
    if isinstance(value, complex):
        return [_plain(value.real), _plain(value.imag)]
    return value


def dumps_json(payload: Any) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.write_text(dumps_json(payload), encoding="utf-8")
    return path
