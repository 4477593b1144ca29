"""Run records and their deterministic CSV / JSON serialization.

CSV: comma separated, UTF-8, LF line endings, one header row, columns in
the order declared by the table. Floats are printed with 17 significant
digits (``%.17g``), booleans as 1/0, missing values as empty fields.
JSON: objects with sorted keys, the same float formatting, booleans as
``true``/``false`` and missing or non-finite values as ``null``.

Wall time is kept on the record but never emitted, so identical configs
reproduce byte-identical files.
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Table:
    columns: tuple
    rows: list = field(default_factory=list)

    def add(self, **values):
        missing = set(values) - set(self.columns)
        if missing:
            raise KeyError(f"unknown columns {sorted(missing)}")
        self.rows.append(tuple(values.get(c) for c in self.columns))

    def column(self, name):
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


@dataclass
class RunRecord:
    experiment: str
    config_hash: str
    version: str
    config: dict
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    passed: bool = True
    wall_time: float = 0.0


def _scalar(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _csv_cell(v):
    v = _scalar(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _json_text(v, indent=0):
    v = _scalar(v)
    pad, inner = "  " * indent, "  " * (indent + 1)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}" if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{inner}{_json_text(str(k))}: {_json_text(v[k], indent + 1)}'
                 for k in sorted(v, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        return "[" + ", ".join(_json_text(x, indent + 1) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def write_csv(table, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_csv_cell(v) for v in row])


def record_to_json(record):
    doc = {
        "experiment": record.experiment,
        "config_hash": record.config_hash,
        "version": record.version,
        "config": record.config,
        "summary": record.summary,
        "passed": record.passed,
        "tables": {name: {"columns": list(t.columns), "rows": [list(r) for r in t.rows]}
                   for name, t in record.tables.items()},
    }
    return _json_text(doc) + "\n"


def emit(record, fmt, out_dir):
    """Write a record under ``out_dir``; returns the list of written paths.

    ``csv``: one ``<experiment>_<table>.csv`` per table plus
    ``<experiment>_summary.csv`` (key,value rows). ``json``: a single
    ``<experiment>.json``.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if fmt == "json":
            path = os.path.join(out_dir, f"{record.experiment}.json")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(record_to_json(record))
            return [path]
        for name, table in record.tables.items():
            path = os.path.join(out_dir, f"{record.experiment}_{name}.csv")
            write_csv(table, path)
            written.append(path)
        summary = Table(("key", "value"))
        for k in sorted(record.summary):
            v = record.summary[k]
            summary.add(key=k, value=";".join(_csv_cell(x) for x in v)
                        if isinstance(v, (list, tuple)) else v)
        summary.add(key="config_hash", value=record.config_hash)
        summary.add(key="version", value=record.version)
        summary.add(key="passed", value=record.passed)
        path = os.path.join(out_dir, f"{record.experiment}_summary.csv")
        write_csv(summary, path)
        written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write outputs under {out_dir}: {exc}") from exc
    return written
