"""CSV ingestion, k-nearest-neighbour imputation and the flat config format.

Config grammar (one setting per line)::

    # comment
    key = value
    list_key = 1, 2, 3

Keys are case-insensitive; blank lines and ``#``/``;`` comment lines are ignored.
"""
from __future__ import annotations

import configparser
import csv
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError
from .kle import Dataset

MISSING_TOKENS = {"", "nan"}


def load_csv(path, label_column: Optional[str]) -> Dataset:
    """Read a headered CSV; every non-label column must be numeric.

    Empty cells and ``NaN`` (any case) are recorded in ``missing_mask`` and
    stored as NaN.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [r for r in reader if any(c.strip() for c in r)]
    if label_column is not None and label_column not in header:
        raise DataError(f"{path}: label column {label_column!r} not in header")
    lab_idx = header.index(label_column) if label_column is not None else None
    feat_idx = [j for j in range(len(header)) if j != lab_idx]
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.empty((len(rows), len(feat_idx)))
    mask = np.zeros(values.shape, bool)
    labels = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, header has {len(header)}")
        if lab_idx is not None:
            lab = row[lab_idx].strip()
            if lab.lower() in MISSING_TOKENS:
                raise DataError(f"{path}: row {i} has no label")
            labels.append(lab)
        for k, j in enumerate(feat_idx):
            cell = row[j].strip()
            if cell.lower() in MISSING_TOKENS:
                values[i - 2, k] = np.nan
                mask[i - 2, k] = True
                continue
            try:
                values[i - 2, k] = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i}, column {header[j]!r}: not a number: {cell!r}") from None
    return Dataset(values, np.array(labels) if lab_idx is not None else None,
                   [header[j] for j in feat_idx], mask)


def write_csv(data: Dataset, path, label_column: str = "label") -> None:
    """Write ``data`` with ``repr`` floats so a reload is bit-identical."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = list(data.feature_names)
        if data.labels is not None:
            head = head + [label_column]
        w.writerow(head)
        for i in range(data.n_samples):
            cells = ["" if data.missing_mask[i, j] else repr(float(data.values[i, j]))
                     for j in range(data.n_features)]
            if data.labels is not None:
                cells.append(data.labels[i])
            w.writerow(cells)


def knn_impute(data: Dataset, k: int = 5) -> Dataset:
    """Fill each missing cell with the mean of its column over the ``k`` nearest rows.

    Distance is Euclidean over the coordinates observed in both rows; only rows
    that observe the target column are candidates, and rows with no shared
    observed coordinate rank last. Ties go to the lower row index. Donor values
    are always original observations.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    x = data.values
    obs = ~data.missing_mask
    empty = np.flatnonzero(~obs.any(axis=0))
    if empty.size:
        raise DataError(f"column {data.feature_names[empty[0]]!r} has no observed values")
    if obs.all():
        return data
    filled = np.where(obs, x, 0.0)
    out = x.copy()
    for i in np.flatnonzero(~obs.all(axis=1)):
        both = obs & obs[i]
        diff = np.where(both, filled - filled[i], 0.0)
        dist = np.sqrt(np.sum(diff**2, axis=1))
        dist[~both.any(axis=1)] = np.inf
        for c in np.flatnonzero(~obs[i]):
            cand = np.flatnonzero(obs[:, c])
            cand = cand[cand != i]
            order = np.lexsort((cand, dist[cand]))
            donors = cand[order[:k]]
            out[i, c] = x[donors, c].mean()
    return replace(data, values=out, missing_mask=np.zeros_like(data.missing_mask))


def read_config(path) -> dict:
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=None)
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from exc
    return dict(parser["config"])


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())
