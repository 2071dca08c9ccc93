"""Machine-readable audit results and their deterministic serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class Report:
    """Outcome of an audit.

    ``metrics`` holds scalar results (margins, fitted rates, constants);
    ``rows`` holds per-sample or per-step records that become CSV lines.
    """

    name: str
    passed: bool
    metrics: dict[str, Any] = field(default_factory=dict)
    rows: list[dict[str, Any]] = field(default_factory=list)
    children: list[Report] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "metrics": _jsonable(self.metrics),
            "failures": list(self.failures),
            "children": [c.to_dict() for c in self.children],
        }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return float(format(x, ".17g"))
    return obj


def format_value(x: Any) -> str:
    """17 significant digits, '.' decimal separator, no locale."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def rows_to_csv(rows: list[dict[str, Any]], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(c, "")) for c in columns])
    return buf.getvalue()


def emit(report: Report, out_dir: str | Path, *, stem: str | None = None,
         columns: list[str] | None = None) -> list[Path]:
    """Write ``<stem>.json`` and ``<stem>.csv`` (plus one CSV per child
    report, suffixed with the child index) into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or report.name.replace("[", "_").replace("]", "")

    written = []
    path = out_dir / f"{stem}.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    written.append(path)

    path = out_dir / f"{stem}.csv"
    path.write_bytes(rows_to_csv(report.rows, columns).encode("utf-8"))
    written.append(path)

    for i, child in enumerate(report.children):
        if child.rows:
            path = out_dir / f"{stem}_rung{i}.csv"
            path.write_bytes(rows_to_csv(child.rows).encode("utf-8"))
            written.append(path)

    return written
