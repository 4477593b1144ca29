"""File formats: view datasets (CSV / binary), target spectra (JSON), mode spectra (CSV).

Binary view layout (all little-endian)::

    bytes 0-7    magic b"MVCCA001"
    bytes 8-31   n, d, view_index as uint64
    bytes 32-    n*d float64 values, column-major
"""

import csv
import json
import struct

import numpy as np

from .cca import ViewDataset
from .exceptions import ConfigError, DimensionError
from .spectra import TargetSpectra

MAGIC = b"MVCCA001"
_HEADER = struct.Struct("<8sQQQ")
CSV_HEADER = ("view", "sample", "coord", "value")


def write_view_binary(dataset, path):
    Z = dataset.Z
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, Z.shape[0], Z.shape[1], dataset.view_index))
        fh.write(np.asfortranarray(Z, dtype="<f8").tobytes(order="F"))


def read_view_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ConfigError(f"{path}: truncated header")
        magic, n, d, view = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * d:
        raise ConfigError(f"{path}: expected {n * d} values, found {data.size}")
    return ViewDataset(data.reshape((n, d), order="F").astype(np.float64), int(view))


def write_views_csv(datasets, path):
    """Long-format CSV with header ``view,sample,coord,value``; floats at 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for ds in datasets:
            for t, row in enumerate(ds.Z):
                for k, v in enumerate(row):
                    w.writerow((ds.view_index, t, k, f"{v:.17g}"))


def read_views_csv(path):
    """Inverse of :func:`write_views_csv`; returns datasets sorted by view index."""
    cells = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            try:
                v, t, k, val = int(row[0]), int(row[1]), int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}:{lineno}: malformed row {row}") from exc
            cells.setdefault(v, {})[(t, k)] = val
    out = []
    for v in sorted(cells):
        entries = cells[v]
        n = 1 + max(t for t, _ in entries)
        d = 1 + max(k for _, k in entries)
        if len(entries) != n * d:
            raise DimensionError(f"{path}: view {v} is not a complete {n}x{d} grid")
        Z = np.empty((n, d))
        for (t, k), val in entries.items():
            Z[t, k] = val
        out.append(ViewDataset(Z, v))
    return out


def load_views(path):
    """Load datasets from ``.csv`` or the binary format (any other extension)."""
    path = str(path)
    if path.lower().endswith(".csv"):
        return read_views_csv(path)
    return [read_view_binary(path)]


def read_target_spectra(path):
    with open(path, encoding="utf-8") as fh:
        return TargetSpectra.from_dict(json.load(fh))


def write_target_spectra(targets, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(targets.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_mode_spectrum_csv(spectrum, path):
    """Columns ``index`` (semicolon-joined), ``degree``, ``t_n``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("index", "degree", "t_n"))
        for idx, weight in spectrum.modes:
            w.writerow((";".join(map(str, idx)), sum(idx), f"{weight:.17g}"))
