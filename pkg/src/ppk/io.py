"""CSV tables with '#'-prefixed metadata headers, and sweep manifests.

Files are plain CSV preceded by comment lines of the form ``# key: value``.
Floats are written with shortest round-trip repr, so reading a table back
reproduces the in-memory rows exactly; a JSON manifest alongside the
output lets interrupted sweeps resume without recomputing finished points.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

__all__ = ["TableData", "write_table", "read_table", "Manifest"]


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (int, str)):
        return str(v)
    if v is None:
        return ""
    return repr(v)


def _parse_value(s: str):
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


@dataclass
class TableData:
    metadata: dict
    columns: list
    rows: list

    def column(self, name):
        return [row[name] for row in self.rows]


def write_table(path, metadata: dict, columns, rows) -> None:
    """Write metadata lines, a header row, then one CSV row per record.

    ``rows`` holds dicts keyed by column name; missing keys become blanks.
    """
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_value(row.get(c)) for c in columns])
    os.replace(tmp, path)


def read_table(path) -> TableData:
    metadata = {}
    with open(path, newline="") as fh:
        header = None
        rows = []
        reader = csv.reader(fh)
        for raw in reader:
            if not raw:
                continue
            if raw[0].startswith("#"):
                line = ",".join(raw)[1:].strip()
                if ":" in line:
                    key, _, value = line.partition(":")
                    metadata[key.strip()] = value.strip()
                continue
            if header is None:
                header = raw
                continue
            rows.append({c: _parse_value(v) for c, v in zip(header, raw)})
    if header is None:
        raise ValueError(f"{path}: no header row found")
    return TableData(metadata=metadata, columns=header, rows=rows)


def rows_equal(a: dict, b: dict) -> bool:
    """Equality where NaN matches NaN (for round-trip checks)."""
    if a.keys() != b.keys():
        return False
    for k in a:
        va, vb = a[k], b[k]
        if isinstance(va, float) and isinstance(vb, float):
            if math.isnan(va) and math.isnan(vb):
                continue
            if va != vb:
                return False
        elif va != vb:
            return False
    return True


class Manifest:
    """Per-point result store backing resumable sweeps.

    Results are flushed after every completed point; the final CSV is
    assembled from the manifest in point order, so a resumed run yields a
    byte-identical file.
    """

    def __init__(self, out_path: str, spec_key: str):
        self.path = f"{out_path}.manifest.json"
        self.spec_key = spec_key
        self.results: dict[int, list] = {}

    def load_if_matching(self) -> bool:
        if not os.path.exists(self.path):
            return False
        with open(self.path) as fh:
            data = json.load(fh)
        if data.get("spec_key") != self.spec_key:
            return False
        self.results = {int(k): v for k, v in data["results"].items()}
        return True

    def record(self, index: int, rows: list) -> None:
        self.results[index] = rows
        tmp = f"{self.path}.tmp"
        with open(tmp, "w") as fh:
            json.dump({"spec_key": self.spec_key,
                       "results": {str(k): v for k, v in self.results.items()}}, fh)
        os.replace(tmp, self.path)

    def done(self, index: int) -> bool:
        return index in self.results

    def all_rows(self, n_points: int) -> list:
        rows = []
        for i in range(n_points):
            rows.extend(self.results[i])
        return rows

    def cleanup(self) -> None:
        if os.path.exists(self.path):
            os.remove(self.path)
