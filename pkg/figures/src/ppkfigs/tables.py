"""Reader for the ppk CSV format: '#'-metadata lines, then a plain table."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    """Input table is missing a column the renderer needs."""


@dataclass
class Table:
    metadata: dict
    columns: list
    rows: list

    def require(self, *names):
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
        if not self.rows:
            raise SchemaError("no data rows in table")

    def array(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def strings(self, name) -> list:
        return [str(row[name]) for row in self.rows]


def _parse(s: str):
    if s == "":
        return None
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_table(path) -> Table:
    metadata = {}
    header = None
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.reader(fh):
            if not raw:
                continue
            if raw[0].startswith("#"):
                line = ",".join(raw)[1:].strip()
                key, _, value = line.partition(":")
                metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = raw
                continue
            rows.append({c: _parse(v) for c, v in zip(header, raw)})
    if header is None:
        raise SchemaError(f"{path}: no header row")
    return Table(metadata=metadata, columns=header, rows=rows)
