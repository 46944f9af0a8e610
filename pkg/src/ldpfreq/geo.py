"""CSV wrapper around the polar Laplace mechanism."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ldpfreq.errors import LoadError
from ldpfreq.noise import GeoBudget, planar_laplace_many


def read_points(path, x_col: str = "x", y_col: str = "y"):
    """Header plus string rows, and the ``(n, 2)`` coordinate array."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    if not records:
        raise LoadError("empty file")
    header = records[0]
    try:
        ix, iy = header.index(x_col), header.index(y_col)
    except ValueError:
        raise LoadError(f"header must contain {x_col!r} and {y_col!r} columns", row=1) from None
    rows, xy = [], []
    for lineno, rec in enumerate(records[1:], start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise LoadError(f"expected {len(header)} cells, found {len(rec)}", row=lineno)
        try:
            x, y = float(rec[ix]), float(rec[iy])
        except ValueError:
            raise LoadError(f"non-numeric coordinate ({rec[ix]!r}, {rec[iy]!r})", row=lineno) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise LoadError("non-finite coordinate", row=lineno)
        rows.append(rec)
        xy.append((x, y))
    return header, rows, np.array(xy, dtype=float).reshape(-1, 2), (ix, iy)


def geo_sanitize(in_path, out_path, level: float, radius: float, seed: int,
                 x_col: str = "x", y_col: str = "y") -> int:
    """Perturb every row's coordinates independently with ``epsilon = level / radius``.

    Other columns are copied unchanged. Returns the number of rows written.
    """
    budget = GeoBudget.from_level(level, radius)
    header, rows, xy, (ix, iy) = read_points(in_path, x_col, y_col)
    noisy = planar_laplace_many(xy, budget, np.random.default_rng(seed))
    with Path(out_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for rec, (x, y) in zip(rows, noisy):
            rec = list(rec)
            rec[ix], rec[iy] = repr(float(x)), repr(float(y))
            w.writerow(rec)
    return len(rows)
