"""Deterministic JSON and CSV emitters."""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

from .polytope import barycentric


def _canon(obj):
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(f"{x:.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_canon(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(x) for x in obj]
    return obj


def dumps(obj) -> str:
    """JSON with sorted keys and floats rounded to 12 significant digits."""
    return json.dumps(_canon(obj), sort_keys=True, indent=1) + "\n"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = [",".join(header)]
    for r in rows:
        out.append(",".join(f"{x:.12g}" if isinstance(x, (float, np.floating)) else str(x) for x in r))
    return "\n".join(out) + "\n"


def curve_csv(c) -> str:
    return rows_to_csv(["x", "y"], zip(c.x.tolist(), c.y.tolist()))


def barycentric_csv(points, label: str = "") -> str:
    rows = []
    for p in points:
        x, y = barycentric(p)
        rows.append([label, *[float(v) for v in p], x, y])
    return rows_to_csv(["set", "p_1", "p_2", "p_3", "x", "y"], rows)
