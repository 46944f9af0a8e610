"""Categorical datasets: CSV ingestion, value mappings and uniform synthesis."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ldpfreq.errors import InvalidParameterError, LoadError


@dataclass(eq=False)
class Dataset:
    """Rows of value indices; column ``j`` takes values in ``range(sizes[j])``."""

    names: list[str]
    sizes: list[int]
    rows: np.ndarray
    mapping: list[list[str]] | None = field(default=None, compare=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.sizes):
            raise InvalidParameterError(f"rows of shape {self.rows.shape} for {len(self.sizes)} attributes")
        if len(self.names) != len(self.sizes):
            raise InvalidParameterError("one name per attribute is required")
        if any(c < 2 for c in self.sizes):
            raise InvalidParameterError(f"domain sizes must be >= 2, got {self.sizes}")
        if self.rows.size and (self.rows.min() < 0 or np.any(self.rows.max(axis=0) >= np.array(self.sizes))):
            raise InvalidParameterError("cell index outside its attribute domain")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (list(self.names) == list(other.names) and list(self.sizes) == list(other.sizes)
                and np.array_equal(self.rows, other.rows))

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    @property
    def d(self) -> int:
        return len(self.sizes)

    def frequencies(self) -> list[np.ndarray]:
        return [np.bincount(self.rows[:, j], minlength=c) / self.n for j, c in enumerate(self.sizes)]


def load_csv(path, mapping=None) -> Dataset:
    """Read a headed CSV of categorical strings.

    Values are numbered in order of first appearance per column. ``mapping``
    (per-column value lists, or a path to a JSON file written by
    :func:`write_mapping`) fixes the numbering of already known values.
    A column whose domain comes out with a single value is widened to two
    so that every attribute is a proper categorical one.
    """
    path = Path(path)
    if isinstance(mapping, (str, Path)):
        mapping = load_mapping(mapping)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise LoadError("empty file")
    header = [h.strip() for h in records[0]]
    if not header or any(h == "" for h in header):
        raise LoadError("header has empty column names", row=1)
    d = len(header)
    if mapping is not None and len(mapping) != d:
        raise LoadError(f"mapping has {len(mapping)} columns, file has {d}")
    lookup = [{v: i for i, v in enumerate(m)} for m in mapping] if mapping else [{} for _ in range(d)]
    rows = []
    for lineno, rec in enumerate(records[1:], start=2):
        if not rec:
            continue
        if len(rec) != d:
            raise LoadError(f"expected {d} cells, found {len(rec)}", row=lineno)
        idx = []
        for j, cell in enumerate(rec):
            cell = cell.strip()
            if cell == "":
                raise LoadError(f"missing value in column {header[j]!r}", row=lineno)
            idx.append(lookup[j].setdefault(cell, len(lookup[j])))
        rows.append(idx)
    if not rows:
        raise LoadError("no data rows")
    values = [sorted(m, key=m.get) for m in lookup]
    sizes = [max(len(v), 2) for v in values]
    return Dataset(header, sizes, np.array(rows, dtype=np.int64), values)


def load_mapping(path) -> list[list[str]]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return [list(map(str, data["columns"][name])) for name in data["names"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise LoadError(f"bad mapping file {path}: {exc}") from exc


def write_mapping(dataset: Dataset, path) -> None:
    if dataset.mapping is None:
        raise InvalidParameterError("dataset carries no value mapping")
    doc = {"names": dataset.names, "columns": dict(zip(dataset.names, dataset.mapping))}
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def write_csv(dataset: Dataset, path) -> None:
    """Write the dataset back as strings (mapped values when known, else indices)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.names)
        for row in dataset.rows:
            if dataset.mapping is None:
                w.writerow([str(v) for v in row])
            else:
                w.writerow([dataset.mapping[j][v] for j, v in enumerate(row)])


def synth_uniform(n: int, d: int, sizes, seed) -> Dataset:
    """``n`` i.i.d. rows, each attribute uniform on its domain."""
    sizes = [int(c) for c in sizes]
    if n < 1 or d < 1 or len(sizes) != d:
        raise InvalidParameterError(f"need n, d >= 1 and {d} domain sizes, got n={n}, sizes={sizes}")
    rng = np.random.default_rng(seed)
    rows = np.column_stack([rng.integers(c, size=n) for c in sizes])
    return Dataset([f"a{j}" for j in range(d)], sizes, rows)


def parse_synth(text: str) -> tuple[int, int, list[int]]:
    """Parse ``n,d,c1,...`` (a single ``c`` is repeated ``d`` times)."""
    try:
        parts = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise InvalidParameterError(f"bad --synth value {text!r}") from exc
    if len(parts) < 3:
        raise InvalidParameterError("--synth needs n,d,c...")
    n, d, cs = parts[0], parts[1], parts[2:]
    if len(cs) == 1:
        cs = cs * d
    if len(cs) != d:
        raise InvalidParameterError(f"--synth gives {len(cs)} domain sizes for d={d}")
    return n, d, cs
