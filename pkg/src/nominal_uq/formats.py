"""File schemas shared by the CLI.

CSV dialect is fixed for bit-exact interchange: comma separator, dot
decimal, UTF-8, header row required, ``\\n`` line endings.  Class labels
in files are 1-based (they index classes, not arrays); the in-process
API is 0-based, and the conversion happens here and nowhere else.

Schemas
-------
PMF table (``stats`` input)
    CSV: header of class names (or ``p_1..p_K``), one PMF per row.  A
    row may leave trailing cells empty to describe a shorter PMF.
    JSON: ``{"class_names": [...]?, "pmfs": [[...], ...]}`` (rows may
    have different lengths).
Labeled predictions (``score`` input, ``classify`` predictions output)
    CSV: header ``p_1..p_K,label``; label is a 1-based class index.
    JSON: ``{"probs": [[...]], "labels": [...], "class_names": [...]?}``.
Feature table (``classify``/``demo`` train and test)
    CSV: header ``x_1..x_D,label``; label is a 1-based class index.
    JSON: ``{"features": [[...]], "labels": [...]}``.
Propagation model spec
    JSON only: ``{"classes": [{"name", "mu", "sigma", "sampler":
    {"kind": "gaussian"|"uniform"|"constant", "params": {...}}}, ...]}``.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .scoring import LabeledProbabilities

_DIALECT = {"delimiter": ",", "lineterminator": "\n"}


def detect_format(path, fmt=None):
    """Resolve 'csv'/'json' from an explicit flag or the file suffix."""
    if fmt in ("csv", "json"):
        return fmt
    if fmt is not None:
        raise ParseError(f"unknown format {fmt!r}; expected csv or json")
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".json"):
        return suffix[1:]
    raise ParseError(
        f"cannot infer format of {path!r}; pass --format csv|json")


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: invalid JSON ({err})") from None


def _read_csv_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, **_DIALECT)
        rows = list(reader)
    if not rows:
        return None, []
    return rows[0], rows[1:]


def _cell_float(cell, path, row_number, column):
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: row {row_number}, column {column}: "
            f"{cell!r} is not a number") from None


def read_pmf_rows(path, fmt=None):
    """Read a PMF table. Returns (list of float lists, class_names or None)."""
    fmt = detect_format(path, fmt)
    if fmt == "json":
        doc = _load_json(path)
        if not isinstance(doc, dict) or "pmfs" not in doc:
            raise ParseError(f'{path}: expected an object with a "pmfs" list')
        pmfs = doc["pmfs"]
        if not isinstance(pmfs, list) or \
                not all(isinstance(r, list) for r in pmfs):
            raise ParseError(f'{path}: "pmfs" must be a list of lists')
        rows = []
        for i, row in enumerate(pmfs):
            rows.append([_cell_float(v, path, i + 1, j + 1)
                         for j, v in enumerate(row)])
        names = doc.get("class_names")
        return rows, list(names) if names is not None else None
    header, raw = _read_csv_rows(path)
    if header is None:
        return [], None
    names = None if all(h.startswith("p_") for h in header) else list(header)
    rows = []
    for i, cells in enumerate(raw):
        while cells and cells[-1] == "":  # short row: trailing blanks
            cells = cells[:-1]
        if len(cells) > len(header):
            raise ParseError(f"{path}: row {i + 1} has more cells than the header")
        rows.append([_cell_float(c, path, i + 1, j + 1)
                     for j, c in enumerate(cells)])
    return rows, names


def _labels_to_internal(labels, n_classes, path):
    out = []
    for i, lab in enumerate(labels):
        try:
            val = int(lab)
        except (TypeError, ValueError):
            raise ParseError(
                f"{path}: row {i + 1}: label {lab!r} is not an integer") from None
        if not 1 <= val <= n_classes:
            raise ParseError(
                f"{path}: row {i + 1}: label {val} outside 1..{n_classes}")
        out.append(val - 1)
    return np.asarray(out, dtype=int)


def read_labeled_probs(path, fmt=None, eps_norm=None):
    """Read a labeled prediction table into LabeledProbabilities."""
    fmt = detect_format(path, fmt)
    kwargs = {} if eps_norm is None else {"eps_norm": eps_norm}
    if fmt == "json":
        doc = _load_json(path)
        if not isinstance(doc, dict) or "probs" not in doc or "labels" not in doc:
            raise ParseError(
                f'{path}: expected an object with "probs" and "labels"')
        probs = doc["probs"]
        if not isinstance(probs, list) or not probs:
            raise ParseError(f'{path}: "probs" must be a nonempty list of rows')
        width = len(probs[0])
        if any(len(r) != width for r in probs):
            raise ParseError(f'{path}: "probs" rows have unequal lengths')
        if len(doc["labels"]) != len(probs):
            raise ParseError(f"{path}: {len(doc['labels'])} labels for "
                             f"{len(probs)} probability rows")
        labels = _labels_to_internal(doc["labels"], width, path)
        return LabeledProbabilities(np.asarray(probs, dtype=float), labels,
                                    **kwargs)
    header, raw = _read_csv_rows(path)
    if header is None or not raw:
        raise ParseError(f"{path}: no data rows")
    if header[-1] != "label":
        raise ParseError(f'{path}: last column must be named "label"')
    width = len(header) - 1
    probs, labels = [], []
    for i, cells in enumerate(raw):
        if len(cells) != len(header):
            raise ParseError(
                f"{path}: row {i + 1} has {len(cells)} cells, expected {len(header)}")
        probs.append([_cell_float(c, path, i + 1, j + 1)
                      for j, c in enumerate(cells[:-1])])
        labels.append(cells[-1])
    labels = _labels_to_internal(labels, width, path)
    return LabeledProbabilities(np.asarray(probs, dtype=float), labels, **kwargs)


def read_feature_table(path, fmt=None):
    """Read a feature table. Returns (X, labels) with 0-based labels."""
    fmt = detect_format(path, fmt)
    if fmt == "json":
        doc = _load_json(path)
        if not isinstance(doc, dict) or "features" not in doc or "labels" not in doc:
            raise ParseError(
                f'{path}: expected an object with "features" and "labels"')
        feats = doc["features"]
        if not isinstance(feats, list) or not feats:
            raise ParseError(f'{path}: "features" must be a nonempty list')
        if len(doc["labels"]) != len(feats):
            raise ParseError(f"{path}: label/feature count mismatch")
        X = np.asarray(feats, dtype=float)
        labels = _labels_to_internal(doc["labels"], int(1e9), path)
        return X, labels
    header, raw = _read_csv_rows(path)
    if header is None or not raw:
        raise ParseError(f"{path}: no data rows")
    if header[-1] != "label":
        raise ParseError(f'{path}: last column must be named "label"')
    X, labels = [], []
    for i, cells in enumerate(raw):
        if len(cells) != len(header):
            raise ParseError(
                f"{path}: row {i + 1} has {len(cells)} cells, expected {len(header)}")
        X.append([_cell_float(c, path, i + 1, j + 1)
                  for j, c in enumerate(cells[:-1])])
        labels.append(cells[-1])
    labels = _labels_to_internal(labels, int(1e9), path)
    return np.asarray(X, dtype=float), labels


def read_model_spec(path):
    """Read a propagation model spec (JSON)."""
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: model spec must be a JSON object")
    return doc


def write_labeled_probs_csv(path, probs, labels):
    """Write a labeled prediction table (labels stored 1-based)."""
    probs = np.asarray(probs, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, **_DIALECT)
        writer.writerow([f"p_{k + 1}" for k in range(probs.shape[1])] + ["label"])
        for row, lab in zip(probs, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab) + 1])


def write_feature_table_csv(path, X, labels):
    """Write a feature table (labels stored 1-based)."""
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, **_DIALECT)
        writer.writerow([f"x_{j + 1}" for j in range(X.shape[1])] + ["label"])
        for row, lab in zip(X, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab) + 1])


def write_json_report(path, report):
    """Write a report deterministically (stable key order, repr floats)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
