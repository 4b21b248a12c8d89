"""Deterministic JSON and CSV serialization of check reports."""
import csv
import io
import json
import math

import numpy as np

SCHEMA = "report_v1"


def make_report(check, points, per_point, max_residual, passed, **extra):
    out = {
        "check": check,
        "points": len(points) if not isinstance(points, int) else points,
        "per_point": per_point,
        "max_residual": max_residual,
        "pass": bool(passed),
    }
    out.update(extra)
    return out


def plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "as_dict"):
        return plain(obj.as_dict())
    return obj


def dumps(report):
    body = dict(plain(report))
    body.setdefault("schema", SCHEMA)
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())
