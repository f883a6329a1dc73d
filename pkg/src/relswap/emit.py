"""CSV/JSON emitters with bit-stable number formatting, and the curve reader."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .decoherence import Curve
from .errors import CurveParseError

SIGNIFICANT_DIGITS = 9
CURVE_REQUIRED = ("t_m_prime", "dt_prime", "s_exact")


def format_number(x) -> str:
    """9 significant digits: positional for 1e-6 <= |x| < 1e15, scientific otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if x == 0:
        return "0"
    if not 1e-6 <= abs(x) < 1e15:
        return f"{x:.{SIGNIFICANT_DIGITS - 1}e}"
    return np.format_float_positional(x, precision=SIGNIFICANT_DIGITS, unique=False, fractional=False, trim="-")


def _json_value(x):
    if isinstance(x, (str, bool)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Mapping):
        return {str(k): _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in x]
    return float(format_number(x))


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def rows_to_json(header: Sequence[str], rows: Iterable[Sequence], metadata: Mapping, extra: Mapping | None = None) -> str:
    doc = {"metadata": _json_value(metadata)}
    if extra:
        doc.update({k: _json_value(v) for k, v in extra.items()})
    doc["rows"] = [dict(zip(header, (_json_value(v) for v in row))) for row in rows]
    return json.dumps(doc, indent=2) + "\n"


def curve_rows(curve: Curve) -> tuple[list[str], list[tuple]]:
    cols = curve.columns()
    header = list(cols)
    return header, list(zip(*cols.values()))


def read_curve_csv(path) -> Curve:
    """Parse a curve written by ``decohere``; errors name the offending line."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CurveParseError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    missing = [c for c in CURVE_REQUIRED if c not in header]
    if missing:
        raise CurveParseError(f"{path}: header line 1 lacks columns {missing}")
    cols = [header.index(c) for c in CURVE_REQUIRED]
    values = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CurveParseError(f"{path}: line {line_no} has {len(row)} fields, expected {len(header)}")
        try:
            parsed = [float(row[c]) for c in cols]
        except ValueError:
            raise CurveParseError(f"{path}: line {line_no} has a non-numeric value: {','.join(row)}") from None
        if not all(np.isfinite(parsed)):
            raise CurveParseError(f"{path}: line {line_no} has a non-finite value")
        values.append(parsed)
    if not values:
        raise CurveParseError(f"{path}: no data rows")
    arr = np.array(values)
    return Curve(arr[:, 0], arr[:, 1], arr[:, 2])
