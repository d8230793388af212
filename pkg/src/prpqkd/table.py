"""Tabular output shared by the CLI and the reproduction scenarios.

CSV layout: a ``# `` comment line echoing the parameters, a header row, then data.
Floats are written with 12 significant digits, missing values as ``NA``. The JSON
mirror holds the same (already rounded) numbers with ``null`` for ``NA``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any


def format_value(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return "NA"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    return str(value)


def _json_value(value: Any) -> Any:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    if isinstance(value, (bool, int)):
        return value
    if isinstance(value, float):
        return float(f"{value:.12g}") if math.isfinite(value) else format_value(value)
    return str(value)


@dataclass
class Table:
    name: str
    columns: list[str]
    params: dict[str, Any] = field(default_factory=dict)
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def column(self, name: str) -> list[Any]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        echo = " ".join(f"{k}={format_value(v)}" for k, v in self.params.items())
        lines = [f"# {self.name} {echo}".rstrip(), ",".join(self.columns)]
        lines.extend(",".join(format_value(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "params": {k: _json_value(v) for k, v in self.params.items()},
            "columns": self.columns,
            "rows": [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows],
        }
        return json.dumps(doc, indent=1) + "\n"

    def write(self, directory: str, json_mirror: bool = False) -> list[str]:
        os.makedirs(directory, exist_ok=True)
        paths = [os.path.join(directory, f"{self.name}.csv")]
        with open(paths[0], "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        if json_mirror:
            paths.append(os.path.join(directory, f"{self.name}.json"))
            with open(paths[1], "w", encoding="utf-8", newline="") as fh:
                fh.write(self.to_json())
        return paths


def read_csv(text: str) -> tuple[str, list[str], list[list[str]]]:
    """Parse CSV produced by :meth:`Table.to_csv` into (comment, header, rows)."""
    lines = text.splitlines()
    comment = lines[0][2:] if lines and lines[0].startswith("# ") else ""
    body = lines[1:] if comment or (lines and lines[0].startswith("#")) else lines
    header = body[0].split(",")
    return comment, header, [line.split(",") for line in body[1:]]
