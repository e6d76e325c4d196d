"""Versioned run reports with canonical, byte-reproducible serialization.

Reports carry the full effective configuration next to the result rows so a
run can be reproduced from its own output.  The JSON form is canonical:
sorted keys, fixed separators, floats at 17 significant digits (enough to
round-trip IEEE doubles exactly), and no wall-clock content -- identical
config and seed must give identical bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Report:
    command: str
    config: dict
    rows: list[dict]
    summary: dict
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "rows": self.rows,
            "summary": self.summary,
        }


def _format_float(v: float) -> str:
    if math.isnan(v) or math.isinf(v):
        raise ValueError("reports must not contain NaN or infinite values")
    # 17 significant digits round-trip any IEEE double
    s = format(float(v), ".17g")
    return s


def _canonical(value: Any) -> str:
    if isinstance(value, np.generic):
        value = value.item()
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, dict):
        items = sorted(value.items())
        if any(not isinstance(k, str) for k, _ in items):
            raise TypeError("report keys must be strings")
        return "{" + ",".join(f"{json.dumps(k)}:{_canonical(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_canonical(v) for v in value) + "]"
    raise TypeError(f"unsupported report value type {type(value).__name__}")


def to_json_bytes(report: Report) -> bytes:
    return (_canonical(report.to_dict()) + "\n").encode("ascii")


def from_json_bytes(data: bytes) -> Report:
    obj = json.loads(data.decode("ascii"))
    return Report(
        command=obj["command"],
        config=obj["config"],
        rows=obj["rows"],
        summary=obj["summary"],
        schema_version=obj["schema_version"],
    )


def to_csv_bytes(report: Report) -> bytes:
    """Flat row serialization: header from the union of row keys, sorted."""
    keys: list[str] = sorted({k for row in report.rows for k in row})
    lines = [",".join(keys)]
    for row in report.rows:
        cells = []
        for k in keys:
            v = row.get(k, "")
            if isinstance(v, np.generic):
                v = v.item()
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(_format_float(v))
            elif v is None or v == "":
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("ascii")
